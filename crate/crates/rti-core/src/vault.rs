//! The fuzzy vault: locking a secret under a biometric template.
//!
//! Generation splits a random secret into the coefficients of a degree-d
//! polynomial P over GF(2^tau), evaluates P on the encoded genuine
//! minutiae, and buries those points among random chaff points that lie
//! off the polynomial and away from every genuine minutia. The shuffled
//! point list plus the public parameters and a hash of the secret form
//! the helper data.
//!
//! Opening takes a fresh reading of (hopefully) the same finger, picks
//! for each query minutia the nearest vault point within the matching
//! threshold, and searches (d+1)-subsets of those candidates in
//! lexicographic order until an interpolated polynomial reproduces the
//! committed hash. A reading from a different finger selects mostly
//! chaff, comes up short of d+1 consistent points, and the search fails;
//! that failure is the security the identification protocol leans on.

use crate::biotemplate::{minutia_distance, Minutia, MinutiaCodec, Template, TemplateError};
use crate::cryptoshim::{hash, HashDigest};
use crate::gf::{FieldElement, FieldSpec};
use crate::poly::{decode_secret, encode_secret, lagrange_interpolate, PolyError, SecretBits};
use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::Rng;
use std::collections::HashSet;
use thiserror::Error;

/// Default budget for the subset search in [`fv_open`].
pub const DEFAULT_COMBO_CAP: u64 = 1_000_000;

/// Consecutive rejected chaff draws tolerated before generation declares
/// the geometry saturated.
const CHAFF_SATURATION_LIMIT: u32 = 10_000;

#[derive(Debug, Error)]
pub enum VaultError {
    #[error("template has {have} minutiae, need at least {need}")]
    InsufficientMinutiae { have: usize, need: usize },
    #[error("invalid vault parameters: {0}")]
    BadParams(String),
    #[error("{0} consecutive chaff draws violated the constraints; lattice saturated")]
    ChaffSaturation(u32),
    #[error("two template minutiae collide under the tau={0} encoding")]
    EncodingCollision(u32),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Why a vault refused to open. Distinct from [`VaultError`]: these are
/// expected outcomes (an impostor reading *should* land here), not
/// malformed inputs.
#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum OpenFailure {
    #[error("only {have} candidate points within threshold, need {need}")]
    InsufficientCandidates { have: usize, need: usize },
    #[error("no subset matched the committed hash after {attempts} attempts")]
    NoMatch { attempts: u64 },
    #[error("subset search budget of {cap} attempts exhausted")]
    CapExhausted { cap: u64 },
}

/// Public vault parameters, carried inside the helper data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VaultParams {
    pub field: FieldSpec,
    /// Polynomial degree d; the secret is (d+1)*tau bits.
    pub d: usize,
    /// Genuine point count. After generation this records the count
    /// actually embedded (the template may be smaller than requested).
    pub lp: usize,
    /// Chaff point count.
    pub n_chaff: usize,
    /// Matching threshold: query minutiae bind to vault points strictly
    /// closer than this.
    pub w: u32,
    /// Weight of the angular term in the minutia distance.
    pub beta: f64,
    /// Hash of the locked secret; set by [`fv_gen`].
    pub khash: HashDigest,
    /// Subset search budget for [`fv_open`]. Runtime knob, not part of
    /// the serialized form; deserialization resets it to the default.
    pub combo_cap: u64,
}

impl VaultParams {
    /// The standard operating point: GF(2^24), degree 9, 20 genuine
    /// points, 200 chaff, w=20, beta=0.2.
    pub fn with_defaults() -> VaultParams {
        VaultParams {
            field: FieldSpec::gf2_24(),
            d: 9,
            lp: 20,
            n_chaff: 200,
            w: 20,
            beta: 0.2,
            khash: HashDigest([0; 32]),
            combo_cap: DEFAULT_COMBO_CAP,
        }
    }

    /// Bit length of the secret this geometry locks.
    pub fn challenge_bits(&self) -> usize {
        (self.d + 1) * self.field.tau() as usize
    }

    fn validate(&self) -> Result<(), VaultError> {
        let fail = |msg: String| Err(VaultError::BadParams(msg));
        if self.d == 0 {
            return fail("degree must be at least 1".into());
        }
        if self.lp < self.d + 1 {
            return fail(format!("lp={} cannot be below d+1={}", self.lp, self.d + 1));
        }
        if self.w == 0 {
            return fail("threshold w must be positive".into());
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return fail(format!("beta={} must be finite and non-negative", self.beta));
        }
        if self.combo_cap == 0 {
            return fail("combo_cap must be positive".into());
        }
        MinutiaCodec::for_tau(self.field.tau())
            .map_err(|e| VaultError::BadParams(e.to_string()))?;
        Ok(())
    }
}

/// The secret a vault locks: the challenge bit string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Challenge(SecretBits);

impl Challenge {
    pub fn sample(bit_len: usize, rng: &mut impl Rng) -> Challenge {
        Challenge(SecretBits::random(bit_len, rng))
    }

    pub fn from_bits(bits: SecretBits) -> Challenge {
        Challenge(bits)
    }

    pub fn from_hex(s: &str, bit_len: usize) -> Result<Challenge, PolyError> {
        Ok(Challenge(SecretBits::from_hex(s, bit_len)?))
    }

    pub fn bits(&self) -> &SecretBits {
        &self.0
    }

    pub fn bit_len(&self) -> usize {
        self.0.bit_len()
    }

    /// Canonical packed bytes: the hash input and signing message.
    pub fn as_bytes(&self) -> &[u8] {
        self.0.as_bytes()
    }

    pub fn to_hex(&self) -> Result<String, PolyError> {
        self.0.to_hex()
    }
}

/// The public artifact of vault generation: parameters (including the
/// secret hash) plus the shuffled point list. Construct through
/// [`fv_gen`] or [`deserialize_vault`]; both guarantee distinct X
/// coordinates and consistent counts.
#[derive(Debug, Clone, PartialEq)]
pub struct HelperData {
    pub params: VaultParams,
    pub points: Vec<(FieldElement, FieldElement)>,
}

/// Lock `k` under the template. Uses the first `params.lp` minutiae (or
/// the whole template if smaller; the emitted params record the actual
/// count), adds `n_chaff` chaff points, and shuffles.
///
/// Chaff constraints: distinct X across the whole vault, decoded chaff
/// minutia strictly farther than `w` from every genuine minutia, and Y
/// off the polynomial. A lattice too small or a threshold too wide makes
/// the rejection sampler fail closed after 10^4 consecutive rejections.
pub fn fv_gen(
    k: &Challenge,
    bt: &Template,
    params: &VaultParams,
    rng: &mut impl Rng,
) -> Result<HelperData, VaultError> {
    params.validate()?;
    let field = params.field;
    let codec = MinutiaCodec::for_tau(field.tau()).expect("validated");
    if bt.len() < params.d + 1 {
        return Err(VaultError::InsufficientMinutiae {
            have: bt.len(),
            need: params.d + 1,
        });
    }
    let poly = encode_secret(&field, k.bits(), params.d)?;

    let genuine: Vec<&Minutia> = bt.iter().take(params.lp).collect();
    let mut taken_x = HashSet::new();
    let mut points = Vec::with_capacity(genuine.len() + params.n_chaff);
    for m in &genuine {
        let x = codec.encode(m)?;
        if !taken_x.insert(x.value()) {
            return Err(VaultError::EncodingCollision(field.tau()));
        }
        points.push((x, poly.eval(&field, x)));
    }

    let w = params.w as f64;
    let mut rejected_in_a_row = 0u32;
    for _ in 0..params.n_chaff {
        // Draw candidate cells directly on the codec lattice so chaff is
        // indistinguishable from encoded minutiae.
        let bins = (360.0 / codec.theta_bin_width()) as u32;
        let x = loop {
            if rejected_in_a_row >= CHAFF_SATURATION_LIMIT {
                return Err(VaultError::ChaffSaturation(CHAFF_SATURATION_LIMIT));
            }
            let x_cell = rng.gen_range(0..=codec.max_x());
            let y_cell = rng.gen_range(0..=codec.max_y());
            let theta = rng.gen_range(0..bins) as f64 * codec.theta_bin_width();
            let cand = Minutia::new(x_cell, y_cell, theta).expect("lattice point in domain");
            let x = codec.encode(&cand).expect("drawn in codec range");
            let clear_of_genuine = genuine
                .iter()
                .all(|g| minutia_distance(g, &cand, params.beta) > w);
            if !taken_x.contains(&x.value()) && clear_of_genuine {
                break x;
            }
            rejected_in_a_row += 1;
        };
        taken_x.insert(x.value());
        let on_poly = poly.eval(&field, x);
        let y = loop {
            let y = field
                .element(rng.gen_range(0..field.order()))
                .expect("drawn below 2^tau");
            if y != on_poly {
                break y;
            }
        };
        points.push((x, y));
        rejected_in_a_row = 0;
    }

    points.shuffle(rng);

    let out_params = VaultParams {
        lp: genuine.len(),
        khash: hash(k.as_bytes()),
        ..*params
    };
    Ok(HelperData {
        params: out_params,
        points,
    })
}

/// Indices of the vault points a query template binds to: for each query
/// minutia, the single nearest vault point strictly within `w` (ties go
/// to the lower vault index), deduplicated in first-selection order.
pub fn candidate_indices(hd: &HelperData, bt2: &Template) -> Vec<usize> {
    let p = &hd.params;
    let codec = MinutiaCodec::for_tau(p.field.tau()).expect("constructed valid");
    let decoded: Vec<Minutia> = hd.points.iter().map(|&(x, _)| codec.decode(x)).collect();
    let w = p.w as f64;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for q in bt2 {
        let mut best: Option<(f64, usize)> = None;
        for (j, dm) in decoded.iter().enumerate() {
            let dist = minutia_distance(q, dm, p.beta);
            if dist < w && best.is_none_or(|(bd, _)| dist < bd) {
                best = Some((dist, j));
            }
        }
        if let Some((_, j)) = best {
            if seen.insert(j) {
                out.push(j);
            }
        }
    }
    out
}

/// Recover the locked secret from a fresh reading. Searches (d+1)-subsets
/// of the candidate points in lexicographic order, interpolating each and
/// checking the committed hash, up to `params.combo_cap` attempts.
pub fn fv_open(hd: &HelperData, bt2: &Template) -> Result<Challenge, OpenFailure> {
    let p = &hd.params;
    let need = p.d + 1;
    let candidates = candidate_indices(hd, bt2);
    if candidates.len() < need {
        return Err(OpenFailure::InsufficientCandidates {
            have: candidates.len(),
            need,
        });
    }
    let mut attempts = 0u64;
    for combo in candidates.iter().combinations(need) {
        if attempts == p.combo_cap {
            return Err(OpenFailure::CapExhausted { cap: p.combo_cap });
        }
        attempts += 1;
        let pts: Vec<(FieldElement, FieldElement)> =
            combo.iter().map(|&&j| hd.points[j]).collect();
        let poly = lagrange_interpolate(&p.field, &pts, p.d)
            .expect("vault X coordinates are pairwise distinct");
        let secret = decode_secret(&p.field, &poly);
        if hash(secret.as_bytes()) == p.khash {
            return Ok(Challenge::from_bits(secret));
        }
    }
    Err(OpenFailure::NoMatch { attempts })
}

/// Serialize to the vault text format:
///
/// ```text
/// FVAULT1
/// tau=24 modulus=0x100001b d=9 lp=20 n=200 w=20 beta=0.2
/// hk=<64 lowercase hex>
/// <X> <Y>            (lp+n lines, fixed-width lowercase hex)
/// ```
///
/// Every line ends with `\n`; there is no trailing whitespace. Equal
/// helper data serializes to equal bytes.
pub fn serialize_vault(hd: &HelperData) -> String {
    let p = &hd.params;
    let f = p.field;
    let mut out = String::new();
    out.push_str("FVAULT1\n");
    out.push_str(&format!(
        "tau={} modulus={:#x} d={} lp={} n={} w={} beta={}\n",
        f.tau(),
        f.modulus(),
        p.d,
        p.lp,
        p.n_chaff,
        p.w,
        p.beta
    ));
    out.push_str(&format!("hk={}\n", p.khash.to_hex()));
    for &(x, y) in &hd.points {
        out.push_str(&format!("{} {}\n", f.format_element(x), f.format_element(y)));
    }
    out
}

/// Strict inverse of [`serialize_vault`]. Enforces the magic line, the
/// exact header key order, fixed-width lowercase hex, the exact point
/// count, distinct X coordinates, and `\n` line endings. `combo_cap` is
/// not serialized and comes back as the default.
pub fn deserialize_vault(text: &str) -> Result<HelperData, VaultError> {
    let err = |line: usize, msg: String| VaultError::Parse { line, msg };
    if text.contains('\r') {
        return Err(err(0, "carriage returns are not part of the format".into()));
    }
    if !text.ends_with('\n') {
        return Err(err(0, "file must end with a newline".into()));
    }
    let lines: Vec<&str> = text.split('\n').collect();
    // split('\n') on "a\n" gives ["a", ""]; the final empty piece is the
    // trailing newline.
    let lines = &lines[..lines.len() - 1];
    if lines.first() != Some(&"FVAULT1") {
        return Err(err(1, format!("bad magic {:?}", lines.first().unwrap_or(&""))));
    }
    if lines.len() < 3 {
        return Err(err(lines.len(), "truncated vault file".into()));
    }

    let fields: Vec<&str> = lines[1].split(' ').collect();
    let keys = ["tau", "modulus", "d", "lp", "n", "w", "beta"];
    if fields.len() != keys.len() {
        return Err(err(2, format!("expected {} header fields", keys.len())));
    }
    let mut vals = Vec::new();
    for (field, key) in fields.iter().zip(keys) {
        let v = field
            .strip_prefix(key)
            .and_then(|rest| rest.strip_prefix('='))
            .ok_or_else(|| err(2, format!("expected {key}=<value>, got {field:?}")))?;
        vals.push(v);
    }
    let tau: u32 = vals[0]
        .parse()
        .map_err(|_| err(2, format!("bad tau {:?}", vals[0])))?;
    let modulus = vals[1]
        .strip_prefix("0x")
        .filter(|h| !h.bytes().any(|b| b.is_ascii_uppercase()))
        .and_then(|h| u64::from_str_radix(h, 16).ok())
        .ok_or_else(|| err(2, format!("bad modulus {:?}", vals[1])))?;
    let field = FieldSpec::new(tau, modulus).map_err(|e| err(2, e.to_string()))?;
    let d: usize = vals[2]
        .parse()
        .map_err(|_| err(2, format!("bad d {:?}", vals[2])))?;
    let lp: usize = vals[3]
        .parse()
        .map_err(|_| err(2, format!("bad lp {:?}", vals[3])))?;
    let n_chaff: usize = vals[4]
        .parse()
        .map_err(|_| err(2, format!("bad n {:?}", vals[4])))?;
    let w: u32 = vals[5]
        .parse()
        .map_err(|_| err(2, format!("bad w {:?}", vals[5])))?;
    let beta: f64 = vals[6]
        .parse()
        .map_err(|_| err(2, format!("bad beta {:?}", vals[6])))?;

    let khash = lines[2]
        .strip_prefix("hk=")
        .ok_or_else(|| err(3, "expected hk=<hex>".into()))
        .and_then(|h| HashDigest::from_hex(h).map_err(|e| err(3, e.to_string())))?;

    let params = VaultParams {
        field,
        d,
        lp,
        n_chaff,
        w,
        beta,
        khash,
        combo_cap: DEFAULT_COMBO_CAP,
    };
    params.validate().map_err(|e| err(2, e.to_string()))?;

    let expected_points = lp + n_chaff;
    let point_lines = &lines[3..];
    if point_lines.len() != expected_points {
        return Err(err(
            lines.len(),
            format!(
                "expected {expected_points} point lines, found {}",
                point_lines.len()
            ),
        ));
    }
    let mut points = Vec::with_capacity(expected_points);
    let mut taken_x = HashSet::new();
    for (i, line) in point_lines.iter().enumerate() {
        let line_no = i + 4;
        let (xs, ys) = line
            .split_once(' ')
            .ok_or_else(|| err(line_no, "expected `<X> <Y>`".into()))?;
        let x = field
            .parse_element(xs)
            .map_err(|e| err(line_no, e.to_string()))?;
        let y = field
            .parse_element(ys)
            .map_err(|e| err(line_no, e.to_string()))?;
        if !taken_x.insert(x.value()) {
            return Err(err(line_no, format!("duplicate X coordinate {x}")));
        }
        points.push((x, y));
    }
    Ok(HelperData { params, points })
}
