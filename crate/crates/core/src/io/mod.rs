//! Dataset ingestion, external prediction import, and model persistence.

mod csv_io;
mod external;
mod model;

pub use csv_io::{
    load_csv, write_breakdown_csv, write_csv, write_xy, BreakdownEntry, CsvSchema,
};
pub use external::import_external_predictions;
pub use model::{load_model, model_from_json, model_to_json, save_model, MODEL_FORMAT};
