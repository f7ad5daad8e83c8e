//! Fingerprint minutiae and templates.
//!
//! A minutia is (x, y, theta) with x, y in [0, 512) pixels and theta in
//! [0, 360) degrees. The standard field encoding packs a minutia into 24
//! bits as 9/9/6: x, y verbatim and theta quantized into 64 bins of 5.625
//! degrees. Distance between minutiae is Euclidean pixel distance plus a
//! weighted circular angle difference.
//!
//! Smaller fields used by exhaustive tests shrink the packing through
//! [`MinutiaCodec::for_tau`]; the public [`encode_minutia`] and
//! [`decode_minutia`] always mean the standard 24-bit codec.

use crate::gf::FieldElement;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use std::collections::HashSet;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("coordinates ({x}, {y}) outside the 512x512 lattice")]
    CoordinateOutOfRange { x: u16, y: u16 },
    #[error("theta {0} outside [0, 360)")]
    ThetaOutOfRange(f64),
    #[error("minutiae {first} and {second} share a lattice cell")]
    DuplicateCell { first: usize, second: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("no minutia codec for tau={0}; supported range is 3..=24")]
    CodecUnsupported(u32),
    #[error("minutia ({x}, {y}, {theta}) does not fit a {bits_x}/{bits_y}/{bits_theta} codec")]
    CodecRange {
        x: u16,
        y: u16,
        theta: f64,
        bits_x: u32,
        bits_y: u32,
        bits_theta: u32,
    },
    #[error("invalid noise model: {0}")]
    BadNoise(String),
}

/// A single minutia point. Constructed values always satisfy the domain
/// invariants (x, y < 512; 0 <= theta < 360).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minutia {
    x: u16,
    y: u16,
    theta: f64,
}

impl Minutia {
    pub fn new(x: u16, y: u16, theta: f64) -> Result<Minutia, TemplateError> {
        if x >= 512 || y >= 512 {
            return Err(TemplateError::CoordinateOutOfRange { x, y });
        }
        if !theta.is_finite() || !(0.0..360.0).contains(&theta) {
            return Err(TemplateError::ThetaOutOfRange(theta));
        }
        Ok(Minutia { x, y, theta })
    }

    pub fn x(&self) -> u16 {
        self.x
    }

    pub fn y(&self) -> u16 {
        self.y
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

/// A minutia with the detector's confidence score, pre-selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawMinutia {
    pub minutia: Minutia,
    pub confidence: f64,
}

/// Bit split of the lattice packing for one field size. x occupies the
/// top bits, then y, then the theta bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MinutiaCodec {
    bits_x: u32,
    bits_y: u32,
    bits_theta: u32,
}

/// The 24-bit standard packing: 9 bits x, 9 bits y, 6 bits theta.
pub const STANDARD_CODEC: MinutiaCodec = MinutiaCodec {
    bits_x: 9,
    bits_y: 9,
    bits_theta: 6,
};

impl MinutiaCodec {
    /// Deterministic packing for a given field size: theta gets
    /// (tau+2)/4 bits, the rest splits ceil/floor between x and y.
    /// Reproduces 9/9/6 at tau=24 and 3/3/2 at tau=8.
    pub fn for_tau(tau: u32) -> Result<MinutiaCodec, TemplateError> {
        if !(3..=24).contains(&tau) {
            return Err(TemplateError::CodecUnsupported(tau));
        }
        let bits_theta = ((tau + 2) / 4).clamp(1, 6);
        let rest = tau - bits_theta;
        let bits_x = rest.div_ceil(2);
        let bits_y = rest - bits_x;
        debug_assert!(bits_x <= 9 && (1..=9).contains(&bits_y));
        Ok(MinutiaCodec {
            bits_x,
            bits_y,
            bits_theta,
        })
    }

    pub fn tau(&self) -> u32 {
        self.bits_x + self.bits_y + self.bits_theta
    }

    /// Width of one theta bin in degrees.
    pub fn theta_bin_width(&self) -> f64 {
        360.0 / (1u32 << self.bits_theta) as f64
    }

    pub fn theta_bin(&self, theta: f64) -> u32 {
        let bins = 1u32 << self.bits_theta;
        ((theta / self.theta_bin_width()) as u32).min(bins - 1)
    }

    pub fn max_x(&self) -> u16 {
        ((1u32 << self.bits_x) - 1) as u16
    }

    pub fn max_y(&self) -> u16 {
        ((1u32 << self.bits_y) - 1) as u16
    }

    pub fn encode(&self, m: &Minutia) -> Result<FieldElement, TemplateError> {
        if m.x > self.max_x() || m.y > self.max_y() {
            return Err(TemplateError::CodecRange {
                x: m.x,
                y: m.y,
                theta: m.theta,
                bits_x: self.bits_x,
                bits_y: self.bits_y,
                bits_theta: self.bits_theta,
            });
        }
        let value = (m.x as u32) << (self.bits_y + self.bits_theta)
            | (m.y as u32) << self.bits_theta
            | self.theta_bin(m.theta);
        Ok(FieldElement::from_raw(value))
    }

    /// Inverse of [`encode`](Self::encode) up to theta quantization: the
    /// decoded theta is the lower edge of its bin.
    pub fn decode(&self, e: FieldElement) -> Minutia {
        let v = e.value();
        let x = (v >> (self.bits_y + self.bits_theta)) as u16;
        let y = (v >> self.bits_theta & ((1 << self.bits_y) - 1)) as u16;
        let bin = v & ((1 << self.bits_theta) - 1);
        Minutia {
            x,
            y,
            theta: bin as f64 * self.theta_bin_width(),
        }
    }
}

/// Standard 24-bit lattice encoding of a minutia.
pub fn encode_minutia(m: &Minutia) -> FieldElement {
    STANDARD_CODEC
        .encode(m)
        .expect("the standard codec covers the whole minutia domain")
}

/// Inverse of [`encode_minutia`] up to theta quantization.
pub fn decode_minutia(e: FieldElement) -> Minutia {
    STANDARD_CODEC.decode(e)
}

/// Euclidean pixel distance plus beta times the circular angle
/// difference (degrees, wrapped to [0, 180]).
pub fn minutia_distance(a: &Minutia, b: &Minutia, beta: f64) -> f64 {
    let dx = a.x as f64 - b.x as f64;
    let dy = a.y as f64 - b.y as f64;
    let dt = (a.theta - b.theta).abs();
    let dt = dt.min(360.0 - dt);
    (dx * dx + dy * dy).sqrt() + beta * dt
}

/// An ordered set of minutiae whose standard encodings are pairwise
/// distinct. Order is meaningful: vault generation takes the first l_P
/// points and vault opening scans query minutiae in template order.
#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    minutiae: Vec<Minutia>,
}

impl Template {
    pub fn new(minutiae: Vec<Minutia>) -> Result<Template, TemplateError> {
        let mut seen = std::collections::HashMap::new();
        for (i, m) in minutiae.iter().enumerate() {
            if let Some(&first) = seen.get(&encode_minutia(m).value()) {
                return Err(TemplateError::DuplicateCell { first, second: i });
            }
            seen.insert(encode_minutia(m).value(), i);
        }
        Ok(Template { minutiae })
    }

    /// Internal constructor for paths that deduplicate as they build.
    fn from_distinct(minutiae: Vec<Minutia>) -> Template {
        debug_assert!(Template::new(minutiae.clone()).is_ok());
        Template { minutiae }
    }

    pub fn len(&self) -> usize {
        self.minutiae.len()
    }

    pub fn is_empty(&self) -> bool {
        self.minutiae.is_empty()
    }

    pub fn minutiae(&self) -> &[Minutia] {
        &self.minutiae
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Minutia> {
        self.minutiae.iter()
    }

    /// Canonical text form: the minutiae file format, one `x y theta`
    /// row per minutia, sorted by (x, y, theta bin). Lossless: parsing
    /// it back yields an equal template. This is the byte string that
    /// proxy attestations sign.
    pub fn canonical_string(&self) -> String {
        let mut rows: Vec<&Minutia> = self.minutiae.iter().collect();
        rows.sort_by_key(|m| (m.x, m.y, STANDARD_CODEC.theta_bin(m.theta)));
        let mut out = String::new();
        for m in rows {
            out.push_str(&format!("{} {} {}\n", m.x, m.y, m.theta));
        }
        out
    }

    pub fn canonical_bytes(&self) -> Vec<u8> {
        self.canonical_string().into_bytes()
    }
}

impl<'a> IntoIterator for &'a Template {
    type Item = &'a Minutia;
    type IntoIter = std::slice::Iter<'a, Minutia>;

    fn into_iter(self) -> Self::IntoIter {
        self.minutiae.iter()
    }
}

/// Keep the `count` highest-confidence minutiae, deduplicated on the
/// standard lattice cell. Sorting is stable, so equal confidences keep
/// their input order and reruns are deterministic. Returns fewer than
/// `count` minutiae when the deduplicated input is smaller.
pub fn select_top_minutiae(raw: &[RawMinutia], count: usize) -> Template {
    let mut order: Vec<&RawMinutia> = raw.iter().collect();
    order.sort_by(|a, b| b.confidence.total_cmp(&a.confidence));
    let mut seen = HashSet::new();
    let mut picked = Vec::new();
    for r in order {
        if picked.len() == count {
            break;
        }
        if seen.insert(encode_minutia(&r.minutia).value()) {
            picked.push(r.minutia);
        }
    }
    Template::from_distinct(picked)
}

/// Parse the minutiae text format: whitespace-separated
/// `x y theta [confidence]` rows, `#` comment lines, blank lines
/// ignored. Returns the top-`count` template.
pub fn parse_template(text: &str, count: usize) -> Result<Template, TemplateError> {
    let mut rows = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 && fields.len() != 4 {
            return Err(TemplateError::Parse {
                line: line_no,
                msg: format!("expected 3 or 4 fields, got {}", fields.len()),
            });
        }
        let parse_err = |what: &str, v: &str| TemplateError::Parse {
            line: line_no,
            msg: format!("bad {what} {v:?}"),
        };
        let x: u16 = fields[0].parse().map_err(|_| parse_err("x", fields[0]))?;
        let y: u16 = fields[1].parse().map_err(|_| parse_err("y", fields[1]))?;
        let theta: f64 = fields[2].parse().map_err(|_| parse_err("theta", fields[2]))?;
        let confidence: f64 = match fields.get(3) {
            Some(v) => {
                let c: f64 = v.parse().map_err(|_| parse_err("confidence", v))?;
                if !c.is_finite() {
                    return Err(parse_err("confidence", v));
                }
                c
            }
            None => 0.0,
        };
        let minutia = Minutia::new(x, y, theta).map_err(|e| TemplateError::Parse {
            line: line_no,
            msg: e.to_string(),
        })?;
        rows.push(RawMinutia { minutia, confidence });
    }
    Ok(select_top_minutiae(&rows, count))
}

/// [`parse_template`] over a file on disk.
pub fn load_template(path: &Path, count: usize) -> Result<Template, TemplateError> {
    let text = std::fs::read_to_string(path).map_err(|source| TemplateError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_template(&text, count)
}

/// Per-sample sensor noise: Gaussian jitter on position and angle plus
/// an independent drop probability per minutia.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub sigma_xy: f64,
    pub sigma_theta: f64,
    pub drop_rate: f64,
}

impl NoiseModel {
    pub const ZERO: NoiseModel = NoiseModel {
        sigma_xy: 0.0,
        sigma_theta: 0.0,
        drop_rate: 0.0,
    };

    fn validate(&self) -> Result<(), TemplateError> {
        let ok = self.sigma_xy >= 0.0
            && self.sigma_xy.is_finite()
            && self.sigma_theta >= 0.0
            && self.sigma_theta.is_finite()
            && (0.0..1.0).contains(&self.drop_rate);
        if ok {
            Ok(())
        } else {
            Err(TemplateError::BadNoise(format!("{self:?}")))
        }
    }
}

impl Default for NoiseModel {
    /// Noise level used by the synthetic accuracy experiments: strong
    /// enough that higher polynomial degrees visibly cost acceptance,
    /// mild enough that the default operating point stays accurate.
    fn default() -> NoiseModel {
        NoiseModel {
            sigma_xy: 4.0,
            sigma_theta: 6.0,
            drop_rate: 0.25,
        }
    }
}

/// Re-sample a template through the noise model: drop each minutia with
/// probability `drop_rate`, jitter survivors, clamp coordinates to the
/// lattice, wrap theta, and deduplicate colliding cells (first stays).
/// Deterministic for a given RNG state; per minutia the draw order is
/// one drop decision, then (if kept) dx, dy, dtheta.
pub fn perturb_template(
    t: &Template,
    noise: &NoiseModel,
    rng: &mut impl Rng,
) -> Result<Template, TemplateError> {
    noise.validate()?;
    let jitter_xy = Normal::new(0.0, noise.sigma_xy).expect("validated sigma");
    let jitter_theta = Normal::new(0.0, noise.sigma_theta).expect("validated sigma");
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for m in t {
        if rng.gen_bool(noise.drop_rate) {
            continue;
        }
        let x = (m.x as f64 + jitter_xy.sample(rng)).round().clamp(0.0, 511.0) as u16;
        let y = (m.y as f64 + jitter_xy.sample(rng)).round().clamp(0.0, 511.0) as u16;
        let mut theta = (m.theta + jitter_theta.sample(rng)).rem_euclid(360.0);
        if theta >= 360.0 {
            theta = 0.0;
        }
        let p = Minutia { x, y, theta };
        if seen.insert(encode_minutia(&p).value()) {
            out.push(p);
        }
    }
    Ok(Template::from_distinct(out))
}

/// A uniformly random template of `count` distinct lattice cells; thetas
/// sit on bin edges. Models an unrelated finger.
pub fn random_impostor_template(count: usize, rng: &mut impl Rng) -> Template {
    assert!(
        count as u64 <= 512 * 512 * 64,
        "cannot draw {count} distinct lattice cells"
    );
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    while out.len() < count {
        let m = Minutia {
            x: rng.gen_range(0..512),
            y: rng.gen_range(0..512),
            theta: rng.gen_range(0..64) as f64 * STANDARD_CODEC.theta_bin_width(),
        };
        if seen.insert(encode_minutia(&m).value()) {
            out.push(m);
        }
    }
    Template::from_distinct(out)
}
