//! The example networks that ship with the crate.
//!
//! Parameters are illustrative and synthesized, not clinical estimates.

use crate::bn::{load_network, Network};

/// Thirteen-variable first model of fall risk factors.
pub const FALLS_13: &str = include_str!("../../models/falls-13.net");

/// Forty-one variable extended fall-prevention model.
pub const FALLS_EXTENDED: &str = include_str!("../../models/falls-extended.net");

/// Thirteen-variable submodel around loss of autonomy.
pub const AUTONOMY_SUBMODEL: &str = include_str!("../../models/autonomy-submodel.net");

pub fn falls_13() -> Network {
    load_network(FALLS_13).expect("shipped model is valid")
}

pub fn falls_extended() -> Network {
    load_network(FALLS_EXTENDED).expect("shipped model is valid")
}

pub fn autonomy_submodel() -> Network {
    load_network(AUTONOMY_SUBMODEL).expect("shipped model is valid")
}

/// Names accepted by [`by_name`].
pub const NAMES: [&str; 3] = ["falls-13", "falls-extended", "autonomy-submodel"];

/// The network document of a shipped model.
pub fn document(name: &str) -> Option<&'static str> {
    match name {
        "falls-13" => Some(FALLS_13),
        "falls-extended" => Some(FALLS_EXTENDED),
        "autonomy-submodel" => Some(AUTONOMY_SUBMODEL),
        _ => None,
    }
}

/// A shipped model by name.
pub fn by_name(name: &str) -> Option<Network> {
    document(name).map(|doc| load_network(doc).expect("shipped model is valid"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_models_load() {
        assert_eq!(falls_13().len(), 13);
        assert_eq!(falls_extended().len(), 41);
        assert_eq!(autonomy_submodel().len(), 13);
        assert!(NAMES.iter().all(|n| by_name(n).is_some()));
        assert!(by_name("other").is_none());
    }
}
