//! Reconstruction of dynamic MRI sequences from undersampled multi-coil k-t
//! data with a low-rank plus sparse model whose background carries an extra
//! temporal smoothness penalty.
//!
//! The crate is split along the processing chain:
//!
//! * [`imaging`]: Casorati-matrix types and the linear operators (coil
//!   encoding, temporal Fourier transform, temporal finite differences).
//! * [`prox`]: soft-thresholding and singular value thresholding.
//! * [`solvers`]: the proximal gradient solver in its `L1`, `L2` and plain
//!   L+S variants.
//! * [`phantom`]: seeded synthetic ground truth, coil maps, masks and noisy
//!   acquisitions.
//! * [`metrics`]: SER, PSNR, SSIM and HFEN on magnitude images.
//! * [`io`]: the CKTS container, config files, raster and CSV exports.

pub mod error;
pub mod imaging;
pub mod io;
pub mod metrics;
pub mod phantom;
pub mod prox;
pub mod solvers;

pub use error::{Error, Result};
pub use imaging::{
    adjoint_encode, diff_adjoint, diff_apply, encode, temporal_fft, temporal_ifft, CoilSensitivities, DiffImage,
    EncodingOperator, ImageSequence, KtData, SamplingMask,
};
pub use metrics::MetricsReport;
pub use phantom::{PhantomSpec, PhantomTruth};
pub use prox::SingularSpectrum;
pub use solvers::{IterationRecord, ReconResult, SmoothnessMode, SolverConfig, SolverState};

/// Complex sample type used throughout.
pub type C64 = num_complex::Complex64;
