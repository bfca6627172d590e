"""Smoke test for the rbvem Python module.

Build and install first:  pip install --no-build-isolation ./crates/py
"""

import math
import os
import tempfile

import rbvem


def main():
    mesh = rbvem.Mesh.generate("voronoi:60", seed=3)
    assert abs(mesh.area - 1.0) < 1e-12
    print(mesh, "vertex counts", mesh.vertex_counts())

    dbs = [rbvem.OfflineDb.build(n, m=1, l=12, level=3) for n in mesh.vertex_counts()]
    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "first.rbdb")
        dbs[0].save(path)
        again = rbvem.OfflineDb.load(path)
        assert (again.n, again.m) == (dbs[0].n, dbs[0].m)

    exact = rbvem.square_dirichlet_exact(4)
    res = rbvem.solve_eigen(mesh, "rbvem", num_eigs=4, databases=dbs)
    for lh, l in zip(res.eigenvalues, exact):
        print(f"  {lh:12.6f}  exact {l:12.6f}")
    assert abs(res.eigenvalues[0] / (2 * math.pi**2) - 1) < 0.1
    assert res.max_residual < 1e-8
    assert len(res.eigenvectors[0]) == mesh.n_points

    vem = rbvem.solve_eigen(mesh, "vem", num_eigs=4, alpha=1.0, beta=1.0)
    assert abs(vem.eigenvalues[0] / (2 * math.pi**2) - 1) < 0.1

    try:
        rbvem.solve_eigen(mesh, "rbvem", alpha=2.0)
    except ValueError as e:
        print("rejected:", e)
    else:
        raise AssertionError("alpha accepted for rbvem")

    files = rbvem.run_experiment("problem=square_eig\nmeshes=dyadic:4,dyadic:8,dyadic:16\nnum_eigs=2\nL=12\nlevel=3\n")
    print(files["convergence.csv"], end="")
    rate = rbvem.convergence_rate([0.4, 0.2, 0.1], [1.6e-1, 4e-2, 1e-2])
    assert abs(rate - 2.0) < 1e-12
    print("ok")


if __name__ == "__main__":
    main()
