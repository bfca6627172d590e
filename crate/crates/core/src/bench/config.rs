use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::eigsolve::{BoundaryCondition, SweepMode};
use crate::error::{Error, Result};
use crate::polymesh::{
    generate_dyadic_checkerboard, generate_dyadic_lshape, generate_dyadic_mesh, generate_octagon_mesh,
    generate_voronoi_checkerboard, generate_voronoi_lshape, generate_voronoi_mesh, load_mesh, PolyMesh, VoronoiOptions,
};
use crate::vem_core::{LoadMode, Method};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Problem {
    SquareEig,
    LshapeEig,
    DiffusionEig,
    SourceConv,
    MRobustness,
    ParamSweep,
}

impl FromStr for Problem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "square_eig" => Problem::SquareEig,
            "lshape_eig" => Problem::LshapeEig,
            "diffusion_eig" => Problem::DiffusionEig,
            "source_conv" => Problem::SourceConv,
            "m_robustness" => Problem::MRobustness,
            "param_sweep" => Problem::ParamSweep,
            _ => return Err(Error::Config(format!("unknown problem '{s}'"))),
        })
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Problem::SquareEig => "square_eig",
            Problem::LshapeEig => "lshape_eig",
            Problem::DiffusionEig => "diffusion_eig",
            Problem::SourceConv => "source_conv",
            Problem::MRobustness => "m_robustness",
            Problem::ParamSweep => "param_sweep",
        })
    }
}

/// A mesh given as `family:size` or a path to a mesh file.
#[derive(Clone, Debug, PartialEq)]
pub enum MeshSpec {
    Dyadic(usize),
    Octagon(usize),
    Voronoi(usize),
    LshapeDyadic(usize),
    LshapeVoronoi(usize),
    CheckerDyadic(usize),
    CheckerVoronoi(usize),
    File(PathBuf),
}

impl MeshSpec {
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let Some((family, size)) = s.split_once(':') else {
            return Ok(MeshSpec::File(PathBuf::from(s)));
        };
        let n: usize = size
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad mesh size in '{s}'")))?;
        Ok(match family.trim() {
            "dyadic" => MeshSpec::Dyadic(n),
            "octagon" => MeshSpec::Octagon(n),
            "voronoi" => MeshSpec::Voronoi(n),
            "lshape_dyadic" => MeshSpec::LshapeDyadic(n),
            "lshape_voronoi" => MeshSpec::LshapeVoronoi(n),
            "checker_dyadic" => MeshSpec::CheckerDyadic(n),
            "checker_voronoi" => MeshSpec::CheckerVoronoi(n),
            "file" => return Ok(MeshSpec::File(PathBuf::from(size))),
            f => return Err(Error::Config(format!("unknown mesh family '{f}'"))),
        })
    }

    /// Voronoi families draw their seeds from `seed`.
    pub fn build(&self, seed: u64) -> Result<PolyMesh> {
        let opts = VoronoiOptions::default();
        match self {
            MeshSpec::Dyadic(n) => generate_dyadic_mesh(*n),
            MeshSpec::Octagon(n) => generate_octagon_mesh(*n),
            MeshSpec::Voronoi(n) => generate_voronoi_mesh(*n, seed, opts.lloyd_iters),
            MeshSpec::LshapeDyadic(n) => generate_dyadic_lshape(*n),
            MeshSpec::LshapeVoronoi(n) => generate_voronoi_lshape(*n, seed, &opts),
            MeshSpec::CheckerDyadic(n) => generate_dyadic_checkerboard(*n),
            MeshSpec::CheckerVoronoi(n) => generate_voronoi_checkerboard(*n, seed, &opts),
            MeshSpec::File(p) => load_mesh(p),
        }
    }
}

impl fmt::Display for MeshSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeshSpec::Dyadic(n) => write!(f, "dyadic:{n}"),
            MeshSpec::Octagon(n) => write!(f, "octagon:{n}"),
            MeshSpec::Voronoi(n) => write!(f, "voronoi:{n}"),
            MeshSpec::LshapeDyadic(n) => write!(f, "lshape_dyadic:{n}"),
            MeshSpec::LshapeVoronoi(n) => write!(f, "lshape_voronoi:{n}"),
            MeshSpec::CheckerDyadic(n) => write!(f, "checker_dyadic:{n}"),
            MeshSpec::CheckerVoronoi(n) => write!(f, "checker_voronoi:{n}"),
            MeshSpec::File(p) => write!(f, "{}", p.display()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub problem: Problem,
    pub method: Method,
    /// reduced-basis size per boundary index
    pub m: usize,
    /// offline snapshot count
    pub l: usize,
    pub level: u32,
    pub offline_seed: u64,
    pub meshes: Vec<MeshSpec>,
    pub bc: BoundaryCondition,
    pub num_eigs: usize,
    pub delta: f64,
    pub seed: u64,
    pub window: usize,
    pub m_list: Vec<usize>,
    pub sweep_mode: SweepMode,
    pub sweep_values: Vec<f64>,
    pub tol_match: f64,
    pub load: LoadMode,
    pub db_dir: Option<PathBuf>,
    /// databases loaded before consulting `db_dir`
    pub db_files: Vec<PathBuf>,
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Defaults for `problem`: rbVEM with one mode, the standard mesh
    /// sequence of the problem's domain and its natural boundary condition.
    pub fn new(problem: Problem) -> Self {
        let dy = |ns: &[usize], f: fn(usize) -> MeshSpec| ns.iter().map(|&n| f(n)).collect::<Vec<_>>();
        let (meshes, bc, num_eigs) = match problem {
            Problem::SquareEig => (dy(&[4, 8, 16, 32], MeshSpec::Dyadic), BoundaryCondition::Dirichlet, 10),
            Problem::LshapeEig => (
                dy(&[8, 16, 32, 64], MeshSpec::LshapeDyadic),
                BoundaryCondition::Neumann,
                5,
            ),
            Problem::DiffusionEig => (
                dy(&[8, 16, 32, 64], MeshSpec::CheckerDyadic),
                BoundaryCondition::Neumann,
                2,
            ),
            Problem::SourceConv => (dy(&[4, 8, 16, 32], MeshSpec::Dyadic), BoundaryCondition::Dirichlet, 0),
            Problem::MRobustness => (vec![MeshSpec::Dyadic(16)], BoundaryCondition::Dirichlet, 20),
            Problem::ParamSweep => (Vec::new(), BoundaryCondition::Dirichlet, 6),
        };
        ExperimentConfig {
            problem,
            method: Method::RbVem,
            m: 1,
            l: 100,
            level: 5,
            offline_seed: 0,
            meshes,
            bc,
            num_eigs,
            delta: 10.0,
            seed: 1,
            window: 3,
            m_list: vec![1, 2, 5, 10, 20, 50],
            sweep_mode: SweepMode::AlphaStiff,
            sweep_values: vec![0.5, 1.0, 2.0],
            tol_match: 0.05,
            load: LoadMode::Projected,
            db_dir: None,
            db_files: Vec::new(),
            output: None,
        }
    }

    /// `key = value` lines; `#` starts a comment. `problem` is required.
    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", i + 1)))?;
            if kv.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key '{}'", i + 1, k.trim())));
            }
        }
        Self::from_pairs(kv)
    }

    pub fn from_pairs(mut kv: BTreeMap<String, String>) -> Result<Self> {
        let problem: Problem = kv
            .remove("problem")
            .ok_or_else(|| Error::Config("missing key 'problem'".into()))?
            .parse()?;
        let mut cfg = Self::new(problem);
        let method = kv.remove("method").unwrap_or_else(|| "rbvem".into());
        let alpha = take::<f64>(&mut kv, "alpha")?;
        let beta = take::<f64>(&mut kv, "beta")?;
        let chi = take::<u8>(&mut kv, "chi")?;
        let m = take::<usize>(&mut kv, "M")?;
        cfg.method = match method.as_str() {
            "vem" => {
                if chi.is_some() || m.is_some() {
                    return Err(Error::Config("chi and M do not apply to vem".into()));
                }
                Method::Vem {
                    alpha: alpha.unwrap_or(1.0),
                    beta: beta.unwrap_or(1.0),
                }
            }
            "rbvem" | "rbstab" => {
                if alpha.is_some() || beta.is_some() {
                    return Err(Error::Config(format!("alpha and beta do not apply to {method}")));
                }
                if method == "rbvem" {
                    if chi.is_some() {
                        return Err(Error::Config("chi applies only to rbstab".into()));
                    }
                    Method::RbVem
                } else {
                    Method::RbStab { chi: chi.unwrap_or(1) }
                }
            }
            _ => return Err(Error::Config(format!("unknown method '{method}'"))),
        };
        cfg.method.validate()?;
        if let Some(m) = m {
            cfg.m = m;
        }
        if let Some(v) = take(&mut kv, "L")? {
            cfg.l = v;
        }
        if let Some(v) = take(&mut kv, "level")? {
            cfg.level = v;
        }
        if let Some(v) = take(&mut kv, "offline_seed")? {
            cfg.offline_seed = v;
        }
        match (kv.remove("meshes"), kv.remove("family"), kv.remove("sizes")) {
            (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
                return Err(Error::Config("give either 'meshes' or 'family' with 'sizes'".into()))
            }
            (Some(list), None, None) => {
                cfg.meshes = list.split(',').map(MeshSpec::parse).collect::<Result<_>>()?;
            }
            (None, Some(f), Some(sizes)) => {
                cfg.meshes = sizes
                    .split(',')
                    .map(|s| MeshSpec::parse(&format!("{f}:{}", s.trim())))
                    .collect::<Result<_>>()?;
            }
            (None, Some(_), None) | (None, None, Some(_)) => {
                return Err(Error::Config("'family' and 'sizes' go together".into()))
            }
            (None, None, None) => {}
        }
        if let Some(v) = kv.remove("bc") {
            cfg.bc = match v.as_str() {
                "dirichlet" => BoundaryCondition::Dirichlet,
                "neumann" => BoundaryCondition::Neumann,
                _ => return Err(Error::Config(format!("unknown boundary condition '{v}'"))),
            };
        }
        if let Some(v) = take(&mut kv, "num_eigs")? {
            cfg.num_eigs = v;
        }
        if let Some(v) = take(&mut kv, "delta")? {
            cfg.delta = v;
        }
        if let Some(v) = take(&mut kv, "seed")? {
            cfg.seed = v;
        }
        if let Some(v) = take(&mut kv, "window")? {
            cfg.window = v;
        }
        if let Some(v) = kv.remove("M_list") {
            cfg.m_list = list(&v, "M_list")?;
        }
        if let Some(v) = kv.remove("sweep") {
            cfg.sweep_mode = match v.as_str() {
                "alpha" => SweepMode::AlphaStiff,
                "beta" => SweepMode::BetaMass,
                _ => return Err(Error::Config(format!("unknown sweep '{v}'"))),
            };
        }
        if let Some(v) = kv.remove("sweep_values") {
            cfg.sweep_values = list(&v, "sweep_values")?;
        }
        if let Some(v) = take(&mut kv, "tol_match")? {
            cfg.tol_match = v;
        }
        if let Some(v) = kv.remove("load") {
            cfg.load = match v.as_str() {
                "projected" => LoadMode::Projected,
                "exact_rb" => LoadMode::ExactRb,
                _ => return Err(Error::Config(format!("unknown load mode '{v}'"))),
            };
        }
        cfg.db_dir = kv.remove("db_dir").map(PathBuf::from);
        if let Some(v) = kv.remove("db_files") {
            cfg.db_files = v.split(',').map(|s| PathBuf::from(s.trim())).collect();
        }
        cfg.output = kv.remove("output").map(PathBuf::from);
        if let Some(k) = kv.keys().next() {
            return Err(Error::Config(format!("unknown key '{k}'")));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.method.validate()?;
        if self.method.is_rb() && self.m == 0 {
            return Err(Error::Config("M must be at least 1".into()));
        }
        if self.window < 3 {
            return Err(Error::Config(format!("window must be at least 3, got {}", self.window)));
        }
        if !(self.tol_match > 0.0 && self.tol_match < 1.0) {
            return Err(Error::Config("tol_match must lie in (0, 1)".into()));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::Config("delta must be positive".into()));
        }
        if self.problem != Problem::ParamSweep && self.meshes.is_empty() {
            return Err(Error::Config("no meshes given".into()));
        }
        if self.problem == Problem::MRobustness && (self.m_list.is_empty() || self.m_list.contains(&0)) {
            return Err(Error::Config("M_list needs positive entries".into()));
        }
        match self.problem {
            Problem::LshapeEig | Problem::DiffusionEig if self.bc != BoundaryCondition::Neumann => {
                Err(Error::Config(format!("{} uses Neumann conditions", self.problem)))
            }
            Problem::SourceConv if self.bc != BoundaryCondition::Dirichlet => {
                Err(Error::Config("source_conv uses Dirichlet conditions".into()))
            }
            _ => Ok(()),
        }
    }
}

fn take<T: FromStr>(kv: &mut BTreeMap<String, String>, key: &str) -> Result<Option<T>> {
    kv.remove(key)
        .map(|v| {
            v.parse()
                .map_err(|_| Error::Config(format!("bad value '{v}' for '{key}'")))
        })
        .transpose()
}

fn list<T: FromStr>(v: &str, key: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad entry '{s}' in '{key}'")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_config() {
        let cfg = ExperimentConfig::parse(
            "# square study\nproblem = square_eig\nmethod=vem\nalpha=0.35\nbeta=1\nfamily=voronoi\nsizes=64, 256\nseed=3\n",
        )
        .unwrap();
        assert_eq!(cfg.method, Method::Vem { alpha: 0.35, beta: 1.0 });
        assert_eq!(cfg.meshes, vec![MeshSpec::Voronoi(64), MeshSpec::Voronoi(256)]);
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.bc, BoundaryCondition::Dirichlet);
    }

    #[test]
    fn rejects_incompatible_parameters() {
        for bad in [
            "problem=square_eig\nmethod=rbvem\nalpha=1",
            "problem=square_eig\nmethod=vem\nM=3",
            "problem=square_eig\nmethod=rbvem\nchi=1",
            "problem=square_eig\nmethod=rbstab\nchi=2",
            "problem=square_eig\nwindow=2",
            "problem=lshape_eig\nbc=dirichlet",
            "problem=square_eig\ncolour=red",
            "problem=square_eig\nmeshes=hexagon:4",
            "method=rbvem",
            "problem=square_eig\nproblem=square_eig",
        ] {
            assert!(matches!(ExperimentConfig::parse(bad), Err(Error::Config(_))), "{bad}");
        }
    }

    #[test]
    fn mesh_specs_round_trip() {
        for s in ["dyadic:8", "lshape_voronoi:192", "checker_dyadic:16", "meshes/a.txt"] {
            assert_eq!(MeshSpec::parse(s).unwrap().to_string(), s);
        }
    }
}
