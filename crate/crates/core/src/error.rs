use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("grid size must be a positive even integer, got {0}")]
    InvalidGridSize(usize),

    #[error("{points} sample points cannot resolve degree {degree} (need at least {required})")]
    GridTooCoarse {
        points: usize,
        degree: usize,
        required: usize,
    },

    #[error("radius {0} is outside [0, 1]")]
    RadiusOutOfRange(f64),

    #[error("radii out of order: r = {r} exceeds rho = {rho}")]
    RadiiOutOfOrder { r: f64, rho: f64 },

    #[error("sample grids differ: {left} vs {right} points")]
    GridMismatch { left: usize, right: usize },

    #[error("polynomial is identically zero")]
    ZeroPolynomial,

    #[error("zero at distance {distance:.3e} from the circle |z| = {rho}; perturb rho")]
    ZeroOnCircle { rho: f64, distance: f64 },

    #[error("root iteration failed to converge for degree {0}")]
    RootsDidNotConverge(usize),

    #[error("sample {0} vanishes; no square root branch exists")]
    VanishingSample(usize),

    #[error("phase winds {0} times around the circle; not factorizable")]
    NotFactorizable(i64),

    #[error("chain step `{step}` violated: lhs {lhs:.12e} > rhs {rhs:.12e}")]
    ChainStepViolated { step: String, lhs: f64, rhs: f64 },

    #[error("radial means decrease: ‖f_r‖₁ = {inner} > ‖f_ϱ‖₁ = {outer}")]
    MonotonicityViolated { inner: f64, outer: f64 },

    #[error("polynomial has negative exponents; an analytic polynomial is required")]
    NotAnalytic,

    #[error("sampler integrates over {available} variables but {required} are needed")]
    SamplerTooSmall { available: usize, required: usize },

    #[error("point {0} is outside the open unit disc")]
    OutsideDisc(Complex64),

    #[error("chain property fails at d = {0}")]
    ChainViolated(usize),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
