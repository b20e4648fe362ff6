use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("region has no edges")]
    NoEdges,
    #[error("region is disconnected ({components} components)")]
    Disconnected { components: usize },
    #[error("invalid region: {0}")]
    InvalidRegion(String),
    #[error("marked point ({x}, {y}) is not on boundary component {component}")]
    MarkNotOnBoundary { x: f64, y: f64, component: usize },
    #[error("unbalanced bipartition: {black} black vs {white} white vertices")]
    Unbalanced { black: usize, white: usize },
    #[error("cylinder circumference parameter n = {0} must be odd")]
    EvenCylinder(usize),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("graph is not bipartite: {0}")]
    NotBipartite(String),

    #[error("matrix determinant {0} is not 1")]
    NotUnimodular(f64),
    #[error("dual path is not simple: {0}")]
    NonSimpleDualPath(String),
    #[error("walk is not closed")]
    OpenWalk,
    #[error("edge {0} does not exist")]
    MissingEdge(usize),
    #[error("no edge between vertices {0} and {1}")]
    NotAdjacent(usize, usize),
    #[error("matrix has an eigenvalue on the branch cut of the logarithm")]
    BranchCut,

    #[error("matrix is singular")]
    Singular,
    #[error("matrix of dimension {0} is not even-dimensional")]
    OddDimension(usize),
    #[error("matrix is not antisymmetric (deviation {0:e})")]
    NotAntisymmetric(f64),
    #[error("matrix is not self-dual (deviation {0:e})")]
    NotSelfDual(f64),
    #[error("route unavailable: {0}")]
    RouteUnavailable(String),
    #[error("size mismatch: {0}")]
    Mismatch(String),
    #[error("edge {0} is not on the zipper")]
    NotOnZipper(usize),

    #[error("enumeration cap exceeded: {size} > {cap}")]
    CapExceeded { size: usize, cap: usize },
    #[error("lamination not expressible on this surface: {0}")]
    NotExpressible(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("serialization: {0}")]
    Serde(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}
