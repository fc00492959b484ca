//! Periodized orthogonal discrete wavelet transform.
//!
//! The forward transform runs Mallat's pyramid with circular boundary
//! handling, so the map from signal to coefficients is exactly orthogonal.
//! Coefficients are stored scaling block first, then detail levels from
//! coarse to fine; [`WaveletDecomposition::to_flat`] follows that order and
//! [`dwt_matrix`] builds the matching explicit matrix.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Largest signal length accepted by [`dwt_matrix`].
pub const DWT_MATRIX_LIMIT: usize = 1024;

// Extremal-phase Daubechies low-pass taps, normalized to sum to sqrt(2).
#[allow(clippy::excessive_precision)]
mod taps {
    pub const HAAR: [f64; 2] = [std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2];
    pub const DAUB2: [f64; 4] = [
        0.48296291314453414337,
        0.83651630373780790558,
        0.22414386804201338103,
        -0.12940952255126038117,
    ];
    pub const DAUB3: [f64; 6] = [
        0.332670552950082616,
        0.80689150931109257649,
        0.4598775021184915701,
        -0.1350110200102545887,
        -0.085441273882026661693,
        0.035226291885709536603,
    ];
    pub const DAUB4: [f64; 8] = [
        0.23037781330889650086,
        0.71484657055291564709,
        0.63088076792985890788,
        -0.027983769416859854211,
        -0.18703481171909308408,
        0.030841381835560763627,
        0.032883011666885199735,
        -0.010597401785069032105,
    ];
    pub const DAUB5: [f64; 10] = [
        0.16010239797419291448,
        0.60382926979718967054,
        0.72430852843777292773,
        0.13842814590132073151,
        -0.24229488706638203186,
        -0.032244869584638374648,
        0.077571493840045713523,
        -0.0062414902127982742742,
        -0.012580751999081999469,
        0.003335725285473771278,
    ];
    pub const DAUB6: [f64; 12] = [
        0.11154074335010946362,
        0.49462389039845308568,
        0.75113390802109535068,
        0.31525035170919762909,
        -0.22626469396543982008,
        -0.12976686756726193556,
        0.097501605587323049102,
        0.027522865530305728626,
        -0.031582039317486029565,
        0.00055384220116149613925,
        0.0047772575109455106396,
        -0.0010773010853084795649,
    ];
    pub const DAUB7: [f64; 14] = [
        0.07785205408500917902,
        0.39653931948191730654,
        0.72913209084623511992,
        0.46978228740519312247,
        -0.14390600392856497541,
        -0.22403618499387498264,
        0.071309219266830264751,
        0.080612609151083071913,
        -0.03802993693501441358,
        -0.016574541630666880654,
        0.012550998556099840613,
        0.00042957797292136652113,
        -0.0018016407040474909153,
        0.00035371379997452024845,
    ];
    pub const DAUB8: [f64; 16] = [
        0.054415842243104009955,
        0.31287159091429997066,
        0.67563073629728980681,
        0.58535468365420671277,
        -0.015829105256349305667,
        -0.28401554296154692652,
        0.00047248457391328277036,
        0.12874742662047845886,
        -0.01736930100180754617,
        -0.044088253930794751507,
        0.013981027917398281649,
        0.0087460940474057767164,
        -0.0048703529934515743104,
        -0.0003917403733769470463,
        0.00067544940645056936637,
        -0.00011747678412476953373,
    ];
    pub const DAUB9: [f64; 18] = [
        0.038077947363878346589,
        0.24383467461259035373,
        0.6048231236901111119,
        0.65728807805130053808,
        0.13319738582500757619,
        -0.29327378327917490881,
        -0.096840783222976460514,
        0.14854074933810638014,
        0.030725681479333379212,
        -0.067632829061329973676,
        0.00025094711483145195759,
        0.022361662123679097205,
        -0.0047232047577513972779,
        -0.0042815036824634298345,
        0.0018476468830562264766,
        0.00023038576352319596721,
        -0.00025196318894271013697,
        0.000039347320316271599481,
    ];
    pub const DAUB10: [f64; 20] = [
        0.026670057900555553587,
        0.18817680007769148902,
        0.52720118893172558648,
        0.68845903945360356574,
        0.28117234366057746075,
        -0.24984642432731537942,
        -0.1959462743773770435,
        0.12736934033579326008,
        0.09305736460357235116,
        -0.071394147166397087145,
        -0.029457536821875812858,
        0.03321267405934100174,
        0.0036065535669561696554,
        -0.010733175483330575044,
        0.0013953517470529011658,
        0.0019924052951850561172,
        -0.00068585669495971162656,
        -0.00011646685512928545095,
        0.000093588670320069591334,
        -0.000013264202894521244812,
    ];
}

/// Names accepted by [`make_filter`].
pub const SUPPORTED_FILTERS: [&str; 10] = [
    "haar", "daub2", "daub3", "daub4", "daub5", "daub6", "daub7", "daub8", "daub9", "daub10",
];

/// An orthonormal two-channel filter pair defined by its low-pass taps.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletFilter {
    family: String,
    lowpass: Vec<f64>,
    highpass: Vec<f64>,
    vanishing_moments: usize,
}

impl WaveletFilter {
    pub fn family(&self) -> &str {
        &self.family
    }

    pub fn lowpass(&self) -> &[f64] {
        &self.lowpass
    }

    /// Quadrature mirror of the low-pass filter: `g[n] = (-1)^n h[len-1-n]`.
    pub fn highpass(&self) -> &[f64] {
        &self.highpass
    }

    pub fn vanishing_moments(&self) -> usize {
        self.vanishing_moments
    }

    pub fn len(&self) -> usize {
        self.lowpass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lowpass.is_empty()
    }
}

/// Looks up an extremal-phase Daubechies filter. `haar` is `daub1`.
pub fn make_filter(name: &str) -> Result<WaveletFilter> {
    let key = name.trim().to_ascii_lowercase();
    let (moments, h): (usize, &[f64]) = match key.as_str() {
        "haar" | "daub1" => (1, &taps::HAAR),
        "daub2" => (2, &taps::DAUB2),
        "daub3" => (3, &taps::DAUB3),
        "daub4" => (4, &taps::DAUB4),
        "daub5" => (5, &taps::DAUB5),
        "daub6" => (6, &taps::DAUB6),
        "daub7" => (7, &taps::DAUB7),
        "daub8" => (8, &taps::DAUB8),
        "daub9" => (9, &taps::DAUB9),
        "daub10" => (10, &taps::DAUB10),
        _ => {
            return Err(Error::UnknownWavelet {
                name: name.to_string(),
                supported: SUPPORTED_FILTERS.join(", "),
            })
        }
    };
    let n = h.len();
    let highpass = (0..n)
        .map(|i| if i % 2 == 0 { h[n - 1 - i] } else { -h[n - 1 - i] })
        .collect();
    let family = if moments == 1 {
        "haar".to_string()
    } else {
        format!("daub{moments}")
    };
    Ok(WaveletFilter {
        family,
        lowpass: h.to_vec(),
        highpass,
        vanishing_moments: moments,
    })
}

/// Multilevel coefficients of one signal of length `2^depth`.
///
/// `details[i]` holds level `coarsest + i`, which has `2^(coarsest + i)`
/// coefficients; `scaling` has `2^coarsest`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletDecomposition {
    pub scaling: Vec<f64>,
    pub details: Vec<Vec<f64>>,
    pub depth: usize,
    pub coarsest: usize,
}

impl WaveletDecomposition {
    /// Number of samples in the transformed signal.
    pub fn len(&self) -> usize {
        1 << self.depth
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Detail coefficients of dyadic level `j` (`coarsest <= j < depth`).
    pub fn level(&self, j: usize) -> Option<&[f64]> {
        j.checked_sub(self.coarsest)
            .and_then(|i| self.details.get(i))
            .map(Vec::as_slice)
    }

    /// Dyadic level numbers of the detail blocks, coarse to fine.
    pub fn levels(&self) -> impl Iterator<Item = usize> {
        self.coarsest..self.depth
    }

    /// Finest detail level, `d_{J-1,k}`.
    pub fn finest(&self) -> &[f64] {
        self.details.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn validate(&self) -> Result<()> {
        if self.coarsest >= self.depth {
            return Err(Error::MalformedDecomposition(format!(
                "coarsest level {} must be below depth {}",
                self.coarsest, self.depth
            )));
        }
        if self.scaling.len() != 1 << self.coarsest {
            return Err(Error::MalformedDecomposition(format!(
                "scaling block has {} coefficients, expected {}",
                self.scaling.len(),
                1usize << self.coarsest
            )));
        }
        if self.details.len() != self.depth - self.coarsest {
            return Err(Error::MalformedDecomposition(format!(
                "{} detail levels, expected {}",
                self.details.len(),
                self.depth - self.coarsest
            )));
        }
        for (j, d) in self.levels().zip(&self.details) {
            if d.len() != 1 << j {
                return Err(Error::MalformedDecomposition(format!(
                    "level {j} has {} coefficients, expected {}",
                    d.len(),
                    1usize << j
                )));
            }
        }
        Ok(())
    }

    /// Canonical flat order: scaling, then details coarse to fine.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        out.extend_from_slice(&self.scaling);
        for d in &self.details {
            out.extend_from_slice(d);
        }
        out
    }

    pub fn from_flat(flat: &[f64], coarsest: usize) -> Result<Self> {
        let depth = dyadic_depth(flat.len())?;
        if coarsest >= depth {
            return Err(Error::LevelOutOfRange { j0: coarsest, depth });
        }
        let mut offset = 1 << coarsest;
        let scaling = flat[..offset].to_vec();
        let details = (coarsest..depth)
            .map(|j| {
                let n = 1 << j;
                let block = flat[offset..offset + n].to_vec();
                offset += n;
                block
            })
            .collect();
        Ok(Self {
            scaling,
            details,
            depth,
            coarsest,
        })
    }
}

/// `log2(m)` when `m` is a power of two of at least 2.
pub fn dyadic_depth(m: usize) -> Result<usize> {
    if m < 2 || !m.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(m));
    }
    Ok(m.trailing_zeros() as usize)
}

fn analysis_step(input: &[f64], filter: &WaveletFilter, approx: &mut Vec<f64>, detail: &mut Vec<f64>) {
    let n = input.len();
    let half = n / 2;
    approx.clear();
    detail.clear();
    for k in 0..half {
        let mut a = 0.0;
        let mut d = 0.0;
        for (i, (h, g)) in filter.lowpass.iter().zip(&filter.highpass).enumerate() {
            let x = input[(2 * k + i) % n];
            a += h * x;
            d += g * x;
        }
        approx.push(a);
        detail.push(d);
    }
}

fn synthesis_step(approx: &[f64], detail: &[f64], filter: &WaveletFilter, out: &mut Vec<f64>) {
    let n = approx.len() * 2;
    out.clear();
    out.resize(n, 0.0);
    for (k, (a, d)) in approx.iter().zip(detail).enumerate() {
        for (i, (h, g)) in filter.lowpass.iter().zip(&filter.highpass).enumerate() {
            out[(2 * k + i) % n] += h * a + g * d;
        }
    }
}

/// Forward transform down to level `coarsest` (J0).
pub fn dwt(signal: &[f64], filter: &WaveletFilter, coarsest: usize) -> Result<WaveletDecomposition> {
    let depth = dyadic_depth(signal.len())?;
    if coarsest >= depth {
        return Err(Error::LevelOutOfRange { j0: coarsest, depth });
    }
    let mut current = signal.to_vec();
    let mut approx = Vec::with_capacity(signal.len() / 2);
    let mut details = Vec::with_capacity(depth - coarsest);
    for _ in coarsest..depth {
        let mut detail = Vec::with_capacity(current.len() / 2);
        analysis_step(&current, filter, &mut approx, &mut detail);
        details.push(detail);
        std::mem::swap(&mut current, &mut approx);
    }
    details.reverse();
    Ok(WaveletDecomposition {
        scaling: current,
        details,
        depth,
        coarsest,
    })
}

/// Inverse of [`dwt`].
pub fn idwt(decomp: &WaveletDecomposition, filter: &WaveletFilter) -> Result<Vec<f64>> {
    decomp.validate()?;
    let mut current = decomp.scaling.clone();
    let mut next = Vec::with_capacity(decomp.len());
    for detail in &decomp.details {
        synthesis_step(&current, detail, filter, &mut next);
        std::mem::swap(&mut current, &mut next);
    }
    Ok(current)
}

/// Explicit `m x m` transform matrix `W` with `dwt(x).to_flat() == W x`.
///
/// Assembled as the product of per-level analysis matrices, each written
/// out row by row from the filter taps. Intended as an oracle for small `m`.
pub fn dwt_matrix(m: usize, filter: &WaveletFilter, coarsest: usize) -> Result<DMatrix<f64>> {
    if m > DWT_MATRIX_LIMIT {
        return Err(Error::SizeLimit {
            size: m,
            limit: DWT_MATRIX_LIMIT,
        });
    }
    let depth = dyadic_depth(m)?;
    if coarsest >= depth {
        return Err(Error::LevelOutOfRange { j0: coarsest, depth });
    }
    let mut w = DMatrix::<f64>::identity(m, m);
    // Level with 2^j inputs: its block acts on the leading 2^j rows (the
    // current scaling block) and writes approx rows first, then detail rows.
    for j in (coarsest + 1..=depth).rev() {
        let n = 1 << j;
        let half = n / 2;
        let mut step = DMatrix::<f64>::identity(m, m);
        step.view_mut((0, 0), (n, n)).fill(0.0);
        for k in 0..half {
            for (i, (h, g)) in filter.lowpass.iter().zip(&filter.highpass).enumerate() {
                let col = (2 * k + i) % n;
                step[(k, col)] += h;
                step[(half + k, col)] += g;
            }
        }
        w = step * w;
    }
    // After the loop the layout is scaling, then details coarse to fine.
    Ok(w)
}
