//! Correspondences and graphs shipped with the crate.

pub const CORRESPONDENCES: &[(&str, &str)] = &[
    ("phi2", include_str!("../data/phi2.bipoly")),
    ("phi3", include_str!("../data/phi3.bipoly")),
    ("elkies", include_str!("../data/elkies.bipoly")),
    ("sq", include_str!("../data/sq.bipoly")),
    ("identity", include_str!("../data/identity.bipoly")),
    ("hyperbola", include_str!("../data/hyperbola.bipoly")),
    ("parabola", include_str!("../data/parabola.bipoly")),
];

pub const GRAPHS: &[(&str, &str)] = &[
    ("k4", include_str!("../data/corpus/k4.edges")),
    ("k33", include_str!("../data/corpus/k33.edges")),
    ("petersen", include_str!("../data/corpus/petersen.edges")),
    ("heawood", include_str!("../data/corpus/heawood.edges")),
    ("cube3", include_str!("../data/corpus/cube3.edges")),
];

pub fn correspondence_text(name: &str) -> Option<&'static str> {
    CORRESPONDENCES.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn graph_text(name: &str) -> Option<&'static str> {
    GRAPHS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

/// Modular correspondences, whose interesting points live over `F_{p^2}`.
pub fn is_modular(name: &str) -> bool {
    matches!(name, "phi2" | "phi3" | "elkies")
}
