//! sRGB <-> CIELAB (D65) conversion and the normalized LAB cube used by the
//! network inputs, color bins and color metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of quantization bins per normalized LAB channel.
pub const COLOR_BINS: usize = 16;

const WHITE_D65: [f64; 3] = [0.95047, 1.0, 1.08883];

const RGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
];

const XYZ_TO_RGB: [[f64; 3]; 3] = [
    [3.2404542, -1.5371385, -0.4985314],
    [-0.9692660, 1.8760108, 0.0415560],
    [0.0556434, -0.2040259, 1.0572252],
];

const EPSILON: f64 = 216.0 / 24389.0;
const KAPPA: f64 = 24389.0 / 27.0;

/// A CIELAB color: L in [0, 100], a and b in [-128, 127].
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Lab {
    pub l: f64,
    pub a: f64,
    pub b: f64,
}

impl Lab {
    pub const fn new(l: f64, a: f64, b: f64) -> Self {
        Lab { l, a, b }
    }

    pub fn in_range(&self) -> bool {
        (0.0..=100.0).contains(&self.l)
            && (-128.0..=127.0).contains(&self.a)
            && (-128.0..=127.0).contains(&self.b)
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.l, self.a, self.b]
    }

    /// Channel values clamped into the valid LAB box.
    pub fn clamped(self) -> Lab {
        Lab::new(
            self.l.clamp(0.0, 100.0),
            self.a.clamp(-128.0, 127.0),
            self.b.clamp(-128.0, 127.0),
        )
    }
}

/// Result of an inverse conversion; `clamped` is set when any linear channel
/// fell outside the sRGB gamut.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rgb8 {
    pub rgb: [u8; 3],
    pub clamped: bool,
}

fn srgb_decode(c: f64) -> f64 {
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

fn srgb_encode(c: f64) -> f64 {
    if c <= 0.0031308 {
        12.92 * c
    } else {
        1.055 * c.powf(1.0 / 2.4) - 0.055
    }
}

fn lab_f(t: f64) -> f64 {
    if t > EPSILON {
        t.cbrt()
    } else {
        (KAPPA * t + 16.0) / 116.0
    }
}

fn lab_f_inv(f: f64) -> f64 {
    let f3 = f * f * f;
    if f3 > EPSILON {
        f3
    } else {
        (116.0 * f - 16.0) / KAPPA
    }
}

fn mat3(m: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

/// Converts 8-bit sRGB to CIELAB under D65.
pub fn rgb_to_lab(rgb: [i32; 3]) -> Result<Lab> {
    if rgb.iter().any(|c| !(0..=255).contains(c)) {
        return Err(Error::input(format!("rgb component out of [0,255]: {rgb:?}")));
    }
    let linear = rgb.map(|c| srgb_decode(c as f64 / 255.0));
    let xyz = mat3(&RGB_TO_XYZ, linear);
    let f = [0, 1, 2].map(|i| lab_f(xyz[i] / WHITE_D65[i]));
    Ok(Lab::new(
        116.0 * f[1] - 16.0,
        500.0 * (f[0] - f[1]),
        200.0 * (f[1] - f[2]),
    ))
}

/// Inverse of [`rgb_to_lab`], rounding to 8 bits and clamping out-of-gamut
/// values.
pub fn lab_to_rgb(lab: Lab) -> Result<Rgb8> {
    if !lab.in_range() {
        return Err(Error::input(format!("lab outside channel ranges: {lab:?}")));
    }
    let fy = (lab.l + 16.0) / 116.0;
    let fx = fy + lab.a / 500.0;
    let fz = fy - lab.b / 200.0;
    let xyz = [
        WHITE_D65[0] * lab_f_inv(fx),
        WHITE_D65[1] * if lab.l > KAPPA * EPSILON { fy * fy * fy } else { lab.l / KAPPA },
        WHITE_D65[2] * lab_f_inv(fz),
    ];
    let linear = mat3(&XYZ_TO_RGB, xyz);
    let mut clamped = false;
    let rgb = linear.map(|c| {
        let v = srgb_encode(c.max(0.0)) * 255.0;
        // Half an 8-bit step of slack absorbs rounding at the gamut edge.
        if c < -1e-9 || v > 255.5 {
            clamped = true;
        }
        v.round().clamp(0.0, 255.0) as u8
    });
    Ok(Rgb8 { rgb, clamped })
}

/// Affine map of the LAB box onto [0,1]^3.
pub fn normalize_lab(lab: Lab) -> [f64; 3] {
    [lab.l / 100.0, (lab.a + 128.0) / 255.0, (lab.b + 128.0) / 255.0]
}

pub fn denormalize_lab(n: [f64; 3]) -> Lab {
    Lab::new(n[0] * 100.0, n[1] * 255.0 - 128.0, n[2] * 255.0 - 128.0)
}

/// Quantizes a normalized channel value into one of [`COLOR_BINS`] bins.
pub fn channel_bin(v: f64) -> u8 {
    let b = (v.clamp(0.0, 1.0) * COLOR_BINS as f64).floor() as usize;
    b.min(COLOR_BINS - 1) as u8
}

/// Normalized value at the center of a bin.
pub fn bin_center(bin: u8) -> f64 {
    (bin as f64 + 0.5) / COLOR_BINS as f64
}

pub fn lab_to_bins(lab: Lab) -> [u8; 3] {
    normalize_lab(lab.clamped()).map(channel_bin)
}

pub fn bins_to_normalized(bins: [u8; 3]) -> [f64; 3] {
    bins.map(bin_center)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Reference values from an independent CIELAB implementation
    // (scikit-image rgb2lab, D65/2 degree observer).
    const REFERENCE: [([i32; 3], [f64; 3]); 5] = [
        ([255, 0, 0], [53.2405879437449, 80.0923082256922, 67.2027510444287]),
        ([0, 255, 0], [87.73509948831895, -86.18302974439501, 83.17970317538452]),
        ([0, 0, 255], [32.29567256501351, 79.18559091176556, -107.85730020669489]),
        ([128, 64, 200], [41.88478233809287, 53.52130172525388, -60.35500962231786]),
        ([10, 200, 30], [70.5001319946117, -70.51383107333548, 64.94083996261955]),
    ];

    #[test]
    fn black_and_white() {
        let black = rgb_to_lab([0, 0, 0]).unwrap();
        assert_eq!(black, Lab::new(0.0, 0.0, 0.0));
        let white = rgb_to_lab([255, 255, 255]).unwrap();
        assert!((white.l - 100.0).abs() < 1e-3);
        assert!(white.a.abs() < 0.01 && white.b.abs() < 0.01);
    }

    #[test]
    fn matches_reference_conversion() {
        for (rgb, lab) in REFERENCE {
            let got = rgb_to_lab(rgb).unwrap().to_array();
            for c in 0..3 {
                assert!((got[c] - lab[c]).abs() < 0.1, "{rgb:?}: {got:?} vs {lab:?}");
            }
        }
    }

    #[test]
    fn rejects_out_of_range_rgb() {
        assert!(rgb_to_lab([256, 0, 0]).is_err());
        assert!(rgb_to_lab([0, -1, 0]).is_err());
    }

    #[test]
    fn inverse_examples() {
        let rt = lab_to_rgb(rgb_to_lab([128, 64, 200]).unwrap()).unwrap();
        assert!(!rt.clamped);
        for (got, want) in rt.rgb.iter().zip([128u8, 64, 200]) {
            assert!((*got as i32 - want as i32).abs() <= 1);
        }
        assert_eq!(lab_to_rgb(Lab::new(0.0, 0.0, 0.0)).unwrap().rgb, [0, 0, 0]);
        assert_eq!(lab_to_rgb(Lab::new(100.0, 0.0, 0.0)).unwrap().rgb, [255, 255, 255]);
    }

    #[test]
    fn out_of_gamut_is_flagged() {
        let r = lab_to_rgb(Lab::new(50.0, 127.0, -128.0)).unwrap();
        assert!(r.clamped);
        assert!(lab_to_rgb(Lab::new(101.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_lab(Lab::new(0.0, -128.0, -128.0)), [0.0, 0.0, 0.0]);
        assert_eq!(normalize_lab(Lab::new(100.0, 127.0, 127.0)), [1.0, 1.0, 1.0]);
        let mid = normalize_lab(Lab::new(50.0, 0.0, 0.0));
        assert!((mid[0] - 0.5).abs() < 1e-12);
        assert!((mid[1] - 128.0 / 255.0).abs() < 1e-12);
        assert!((mid[1] - 0.50196).abs() < 1e-5);
    }

    #[test]
    fn bins_cover_unit_interval() {
        assert_eq!(channel_bin(0.0), 0);
        assert_eq!(channel_bin(1.0), (COLOR_BINS - 1) as u8);
        assert!((bin_center(0) - 1.0 / 32.0).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn rgb_lab_round_trip(r in 0i32..=255, g in 0i32..=255, b in 0i32..=255) {
            let back = lab_to_rgb(rgb_to_lab([r, g, b]).unwrap()).unwrap();
            for (got, want) in back.rgb.iter().zip([r, g, b]) {
                prop_assert!((*got as i32 - want).abs() <= 1);
            }
        }

        #[test]
        fn normalize_inverse(l in 0.0f64..=100.0, a in -128.0f64..=127.0, b in -128.0f64..=127.0) {
            let n = normalize_lab(Lab::new(l, a, b));
            prop_assert!(n.iter().all(|v| (0.0..=1.0).contains(v)));
            let back = denormalize_lab(n);
            prop_assert!((back.l - l).abs() < 1e-6);
            prop_assert!((back.a - a).abs() < 1e-6);
            prop_assert!((back.b - b).abs() < 1e-6);
        }
    }
}
