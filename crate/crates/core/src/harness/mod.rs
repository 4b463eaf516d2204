//! Domain families, end-to-end sweeps and the reports built from them.

pub mod caps;
pub mod config;
pub mod family;
pub mod fit;
pub mod pipeline;
pub mod record;
pub mod sharpness;
pub mod sweep;

pub use caps::{Caps, CAPS};
pub use config::{SweepConfig, SUITE_EPS};
pub use family::{generate_family, Domain, FamilyKind, FamilySpec};
pub use fit::{fit_constant, FitReport};
pub use pipeline::{run_domain, run_polygon, DomainOutcome, Framed, Settings};
pub use record::{read_records_csv, write_records_csv, InequalityRecord, SCHEMA_VERSION};
pub use sharpness::{sharpness_check, SharpnessTable};
pub use sweep::{run_domains, run_sweep, sweep, DomainFailure, SweepOutcome};
