//! File formats. Every other module is pure; reading and writing happen here.

mod files;
mod maps;
mod model_file;

pub use files::{
    annotations_json, ensure_dir, parse_annotations, read_annotations, read_slide_png, read_text, write_annotations,
    write_slide_png, write_suite_outputs, write_text, AnnotationFile,
};
pub use maps::{decode_salm, encode_salm, heatmap_rgb, read_salm, render_heatmap, write_salm, SalmGrid};
pub use model_file::{decode_model, encode_model, load_model, save_model, MODEL_FORMAT_VERSION};
