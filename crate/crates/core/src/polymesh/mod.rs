//! Polygons, polygonal meshes, mesh generators and the reference-element map.

mod element_map;
mod generate;
mod io;
mod mesh;
mod point;
mod polygon;
mod voronoi;

pub use element_map::{build_element_map, reference_vertex, ElementMap, MATRIX_BASIS};
pub use generate::{
    generate_dyadic_checkerboard, generate_dyadic_lshape, generate_dyadic_mesh, generate_octagon_mesh, DELTA_REGION,
};
pub use io::{load_mesh, parse_mesh, save_mesh, write_mesh_string};
pub use mesh::PolyMesh;
pub use point::{orient2d, Point2};
pub use polygon::{normalize_polygon, star_shape_check, Polygon, Similarity, AREA_EPS, EDGE_RATIO_MIN};
pub use voronoi::{
    generate_voronoi_checkerboard, generate_voronoi_lshape, generate_voronoi_mesh, voronoi_mesh_from_seeds,
    voronoi_on_rects, Rect, VoronoiOptions,
};
