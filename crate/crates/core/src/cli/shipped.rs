//! Configuration files shipped in the repository's `configs/` directory.

pub const SHIPPED: &[(&str, &str)] = &[
    ("constant", include_str!("../../../../configs/constant.conf")),
    ("standard", include_str!("../../../../configs/standard.conf")),
    ("two_mode", include_str!("../../../../configs/two_mode.conf")),
    ("sweep", include_str!("../../../../configs/sweep.conf")),
];

pub fn shipped(name: &str) -> Option<&'static str> {
    SHIPPED.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}
