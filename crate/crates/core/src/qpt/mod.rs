//! Single-qubit process tomography of analytic and simulated channels.

mod basis;
mod process;
mod reconstruct;
mod report;

pub use basis::{input_states, ChiMatrix, OperatorBasis, LABELS};
pub use process::{apply_process, AnalyticChannel, Channel, ProcessSpec, SimulatedProcess};
pub use reconstruct::{reconstruct_chi, reconstruct_chi_raw, validate_channel, ChannelDiagnostics, ChiReconstruction, RESIDUAL_THRESHOLD};
pub use report::{chi_zz_csv, chi_zz_report, run_qpt, ChiZzRow, QptResult};
