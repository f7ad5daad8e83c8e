//! Deterministic lock-step simulation of identification runs under
//! adversarial routing.
//!
//! A scenario names the human subject, the devices involved, the
//! exchange in use, and what the adversary does with the frames. Running
//! it plays the exchange hop by hop, sampling sensors only where a
//! finger is physically present, and records every frame in a
//! transcript. The same seed always reproduces the same transcript, so a
//! recorded run can be replayed and cross-checked frame by frame.
//!
//! The catalogue of strategies covers the attacks that motivate binding
//! identification to a biometric:
//!
//! * an **evil twin** — a second credentialed device elsewhere answering
//!   in the target's place;
//! * a **cuckoo shell** — an uncredentialed box in front of the user
//!   relaying to a genuine root of trust elsewhere;
//! * the same relay with an **accomplice** pressing their own finger on
//!   the far sensor;
//! * a **cloned biometric** at the far sensor, which defeats the vault
//!   binding by construction and is kept in the catalogue to mark the
//!   boundary of what the exchange can resist.

use crate::biotemplate::{
    perturb_template, random_impostor_template, NoiseModel, Template, TemplateError,
};
use crate::cryptoshim::{rot_gen_keys, GroupMaster, SecretKey, SessionKeyPair};
use crate::protocol::{
    naive_prover_respond, naive_verifier_start, prover_respond, proxy_sample_and_sign,
    verifier_check_proxy, verifier_start, IdentifiedRegistry, Message, ProtocolError,
    ResponseMessage, TAG_HELPER_DATA, TAG_NAIVE_CHALLENGE, TAG_NAIVE_RESPONSE,
    TAG_PROXY_ATTESTATION, TAG_RESPONSE,
};
use crate::cryptoshim::Signature;
use crate::vault::{VaultError, VaultParams};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use thiserror::Error;

/// Salt separating the accomplice's synthesized finger from the subject's.
const ACCOMPLICE_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("replay diverged at hop {hop}: {msg}")]
    ReplayDivergence { hop: usize, msg: String },
    #[error(transparent)]
    Vault(#[from] VaultError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Template(#[from] TemplateError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProtocolKind {
    Naive,
    FvBound,
    Proxy,
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProtocolKind::Naive => "naive",
            ProtocolKind::FvBound => "fv",
            ProtocolKind::Proxy => "proxy",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdversaryStrategy {
    /// Frames travel where they are addressed.
    None,
    /// The challenge is diverted to a second credentialed device.
    EvilTwinRelay,
    /// The device in front of the user is an uncredentialed shell that
    /// relays to a genuine root of trust elsewhere.
    CuckooRelay,
    /// Cuckoo relay, plus an accomplice pressing their own finger on the
    /// far sensor.
    CuckooWithAccompliceChallenger,
    /// The far sensor is fed a clone of the subject's biometric.
    ClonedBiometric,
}

impl AdversaryStrategy {
    fn relays(&self) -> bool {
        !matches!(self, AdversaryStrategy::None)
    }
}

impl fmt::Display for AdversaryStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AdversaryStrategy::None => "none",
            AdversaryStrategy::EvilTwinRelay => "evil-twin",
            AdversaryStrategy::CuckooRelay => "cuckoo",
            AdversaryStrategy::CuckooWithAccompliceChallenger => "cuckoo-accomplice",
            AdversaryStrategy::ClonedBiometric => "cloned",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    /// The device in front of the user, the one being identified.
    Target,
    /// A device somewhere else, reachable only over the network.
    Remote,
    /// A previously identified device vouching for its own sensor.
    Proxy,
}

/// Who has a finger on a node's sensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SensorPresence {
    Nobody,
    Subject,
    Accomplice,
    /// A fabricated copy of the subject's biometric.
    Clone,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeSpec {
    pub label: String,
    pub kind: NodeKind,
    /// Whether the node holds attestation keys credentialed by the group
    /// master.
    pub credentialed: bool,
    pub sensor: SensorPresence,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HumanActor {
    pub name: String,
    /// Seed from which the subject's true finger is synthesized.
    pub template_seed: u64,
    /// Whether the adversary possesses a working clone of this biometric.
    pub cloned_available: bool,
}

impl HumanActor {
    /// The subject's true finger: 20 minutiae, fixed by the seed.
    pub fn true_template(&self) -> Template {
        synth_template(self.template_seed)
    }

    /// The accomplice's finger, derived but unrelated in geometry.
    pub fn accomplice_template(&self) -> Template {
        synth_template(self.template_seed ^ ACCOMPLICE_SALT)
    }
}

fn synth_template(seed: u64) -> Template {
    random_impostor_template(20, &mut ChaCha12Rng::seed_from_u64(seed))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub protocol: ProtocolKind,
    pub strategy: AdversaryStrategy,
    pub human: HumanActor,
    pub nodes: Vec<NodeSpec>,
    /// Sensor noise applied to every sample; zero by default so outcomes
    /// reflect routing, not sampling luck.
    pub noise: NoiseModel,
    pub seed: u64,
    /// For the proxy exchange: whether the proxy's key is in the
    /// verifier's registry of identified devices.
    pub proxy_registered: bool,
}

/// One frame crossing one link.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscriptEntry {
    pub from: String,
    pub to: String,
    pub frame: Vec<u8>,
}

impl TranscriptEntry {
    pub fn describe(&self) -> String {
        let tag_name = match self.frame.first() {
            Some(&TAG_HELPER_DATA) => "helper-data",
            Some(&TAG_RESPONSE) => "response",
            Some(&TAG_PROXY_ATTESTATION) => "proxy-attestation",
            Some(&TAG_NAIVE_CHALLENGE) => "naive-challenge",
            Some(&TAG_NAIVE_RESPONSE) => "naive-response",
            _ => "unknown",
        };
        format!(
            "{} -> {}: {} ({} bytes)",
            self.from,
            self.to,
            tag_name,
            self.frame.len()
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutcome {
    /// 1 = verifier accepted, 0 = rejected. Data, not an exit status.
    pub decision: u8,
    pub transcript: Vec<TranscriptEntry>,
    /// Human-readable narration of what happened at each step.
    pub notes: Vec<String>,
    /// Number of times any sensor was actually read (enrollment included).
    pub sensor_samples: u32,
}

impl ScenarioOutcome {
    /// Render the run: the decision line, the narration, the hops.
    pub fn report(&self, scenario: &Scenario) -> String {
        let mut out = format!(
            "scenario {}: protocol={} strategy={} decision={}\n",
            scenario.name, scenario.protocol, scenario.strategy, self.decision
        );
        for note in &self.notes {
            out.push_str(&format!("  note: {note}\n"));
        }
        out.push_str(&self.transcript_dump());
        out
    }

    pub fn transcript_dump(&self) -> String {
        let mut out = String::new();
        for (i, entry) in self.transcript.iter().enumerate() {
            out.push_str(&format!("  hop {i}: {}\n", entry.describe()));
        }
        out.push_str(&format!("  sensor samples: {}\n", self.sensor_samples));
        out
    }
}

impl Scenario {
    fn node_of_kind(&self, kind: NodeKind) -> Option<&NodeSpec> {
        self.nodes.iter().find(|n| n.kind == kind)
    }

    fn count_kind(&self, kind: NodeKind) -> usize {
        self.nodes.iter().filter(|n| n.kind == kind).count()
    }

    /// Check that the topology can carry the declared protocol and
    /// strategy before anything runs.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let fail = |msg: String| Err(ScenarioError::Invalid(msg));
        let mut seen = std::collections::HashSet::new();
        for n in &self.nodes {
            if n.label == "verifier" {
                return fail("node label `verifier` is reserved".into());
            }
            if !seen.insert(&n.label) {
                return fail(format!("duplicate node label {:?}", n.label));
            }
        }
        for n in &self.nodes {
            if matches!(n.sensor, SensorPresence::Clone) && !self.human.cloned_available {
                return fail(format!(
                    "node {:?} presents a clone but none is available",
                    n.label
                ));
            }
        }
        match self.protocol {
            ProtocolKind::Proxy => {
                if self.strategy != AdversaryStrategy::None {
                    return fail("the proxy exchange takes no adversary strategy".into());
                }
                if self.count_kind(NodeKind::Proxy) != 1 || self.nodes.len() != 1 {
                    return fail("proxy scenarios need exactly one node, of kind proxy".into());
                }
                let proxy = self.node_of_kind(NodeKind::Proxy).expect("counted");
                if proxy.sensor != SensorPresence::Subject {
                    return fail("the subject must be at the proxy's sensor".into());
                }
            }
            ProtocolKind::Naive | ProtocolKind::FvBound => {
                if self.count_kind(NodeKind::Target) != 1 {
                    return fail("need exactly one target node".into());
                }
                if self.count_kind(NodeKind::Proxy) != 0 {
                    return fail("proxy nodes belong to proxy scenarios".into());
                }
                let target = self.node_of_kind(NodeKind::Target).expect("counted");
                let remotes = self.count_kind(NodeKind::Remote);
                if self.strategy.relays() {
                    if remotes != 1 {
                        return fail(format!(
                            "strategy {} needs exactly one remote node",
                            self.strategy
                        ));
                    }
                    let remote = self.node_of_kind(NodeKind::Remote).expect("counted");
                    if !remote.credentialed {
                        return fail("the relay endpoint must hold genuine credentials".into());
                    }
                    match self.strategy {
                        AdversaryStrategy::EvilTwinRelay => {
                            if !target.credentialed {
                                return fail(
                                    "an evil twin shadows a genuinely credentialed target".into(),
                                );
                            }
                        }
                        AdversaryStrategy::CuckooRelay
                        | AdversaryStrategy::CuckooWithAccompliceChallenger => {
                            if target.credentialed {
                                return fail(
                                    "a cuckoo shell has no credentials of its own; that is why it relays"
                                        .into(),
                                );
                            }
                        }
                        AdversaryStrategy::ClonedBiometric => {
                            if !self.human.cloned_available {
                                return fail(
                                    "cloned-biometric strategy requires a clone to exist".into(),
                                );
                            }
                            if remote.sensor != SensorPresence::Clone {
                                return fail("the clone must be at the remote sensor".into());
                            }
                        }
                        _ => {}
                    }
                    if self.strategy == AdversaryStrategy::CuckooWithAccompliceChallenger
                        && remote.sensor != SensorPresence::Accomplice
                    {
                        return fail("the accomplice must be at the remote sensor".into());
                    }
                } else {
                    if remotes != 0 {
                        return fail("remote nodes need a relaying strategy".into());
                    }
                    if self.protocol == ProtocolKind::FvBound
                        && target.sensor == SensorPresence::Nobody
                    {
                        return fail("an honest run needs the subject at the target sensor".into());
                    }
                    if !target.credentialed {
                        return fail("a direct run needs a credentialed target".into());
                    }
                }
                if self.protocol == ProtocolKind::Naive
                    && !matches!(
                        self.strategy,
                        AdversaryStrategy::None | AdversaryStrategy::EvilTwinRelay
                    )
                {
                    return fail(format!(
                        "strategy {} is defined only for the vault-bound exchange",
                        self.strategy
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Mutable run state threaded through the hops.
struct Run<'a> {
    scenario: &'a Scenario,
    rng: ChaCha12Rng,
    transcript: Vec<TranscriptEntry>,
    notes: Vec<String>,
    sensor_samples: u32,
}

impl<'a> Run<'a> {
    fn send(&mut self, from: &str, to: &str, frame: Vec<u8>) -> Vec<u8> {
        self.transcript.push(TranscriptEntry {
            from: from.to_string(),
            to: to.to_string(),
            frame: frame.clone(),
        });
        frame
    }

    fn note(&mut self, msg: String) {
        self.notes.push(msg);
    }

    /// Read a node's sensor. Returns what the device perceives, or None
    /// when nobody is touching it.
    fn sample(&mut self, node: &NodeSpec) -> Result<Option<Template>, ScenarioError> {
        let base = match node.sensor {
            SensorPresence::Nobody => {
                self.note(format!("{}: sensor idle, nothing to sample", node.label));
                return Ok(None);
            }
            SensorPresence::Subject => {
                self.note(format!("{}: sampled the subject's finger", node.label));
                self.scenario.human.true_template()
            }
            SensorPresence::Accomplice => {
                self.note(format!("{}: sampled the accomplice's finger", node.label));
                self.scenario.human.accomplice_template()
            }
            SensorPresence::Clone => {
                self.note(format!(
                    "{}: sampled a clone of the subject's biometric",
                    node.label
                ));
                self.scenario.human.true_template()
            }
        };
        self.sensor_samples += 1;
        let reading = perturb_template(&base, &self.scenario.noise, &mut self.rng)?;
        Ok(Some(reading))
    }
}

fn abort_response(keys: &SessionKeyPair) -> ResponseMessage {
    ResponseMessage {
        aborted: true,
        pk: keys.pk,
        group_cred: keys.group_cred.clone(),
        sigma: Signature::abort_sentinel(),
    }
}

/// Everything fixed before the first frame moves: keys, enrollment, and
/// the generator state the hops will continue from. Shared between
/// [`run_scenario`] and [`audit_sensor_routing`] so both derive the same
/// enrolled template.
struct RunSetup {
    master: GroupMaster,
    keys: HashMap<String, SessionKeyPair>,
    proxy_keys: HashMap<String, SecretKey>,
    enrolled: Template,
    rng: ChaCha12Rng,
}

fn setup_run(scenario: &Scenario) -> Result<RunSetup, ScenarioError> {
    let mut rng = ChaCha12Rng::seed_from_u64(scenario.seed);
    let master = GroupMaster::generate(&mut rng);
    let mut keys: HashMap<String, SessionKeyPair> = HashMap::new();
    let mut proxy_keys: HashMap<String, SecretKey> = HashMap::new();
    for node in &scenario.nodes {
        if node.kind == NodeKind::Proxy {
            proxy_keys.insert(node.label.clone(), SecretKey::generate(&mut rng));
        } else if node.credentialed {
            keys.insert(node.label.clone(), rot_gen_keys(master.secret(), &mut rng));
        }
    }
    // Enrollment: the verifier holds its own reading of the subject.
    let enrolled = perturb_template(&scenario.human.true_template(), &scenario.noise, &mut rng)?;
    Ok(RunSetup {
        master,
        keys,
        proxy_keys,
        enrolled,
        rng,
    })
}

/// Play a scenario to its accept/reject decision.
///
/// The run is lock-step deterministic: one seeded generator drives key
/// generation, enrollment, challenge sampling, and sensor noise in a
/// fixed order, so equal scenarios produce byte-equal transcripts.
pub fn run_scenario(scenario: &Scenario) -> Result<ScenarioOutcome, ScenarioError> {
    scenario.validate()?;
    let RunSetup {
        master,
        keys,
        proxy_keys,
        enrolled,
        rng,
    } = setup_run(scenario)?;
    let mut run = Run {
        scenario,
        rng,
        transcript: Vec::new(),
        notes: Vec::new(),
        sensor_samples: 1, // the enrollment reading
    };
    run.note(format!(
        "verifier: enrolled subject {:?} ({} minutiae)",
        scenario.human.name,
        enrolled.len()
    ));

    let decision = match scenario.protocol {
        ProtocolKind::FvBound => {
            let params = VaultParams::with_defaults();
            let target = scenario.node_of_kind(NodeKind::Target).expect("validated");
            let (mut session, hd_msg) =
                verifier_start(&enrolled, &params, master.pk, &mut run.rng)?;
            run.note("verifier: locked a fresh challenge under the enrolled template".into());
            let hd_frame = Message::HelperData(hd_msg).to_frame();
            let delivered = run.send("verifier", &target.label, hd_frame);

            // Who actually answers the challenge?
            let final_frame = if scenario.strategy.relays() {
                let remote = scenario.node_of_kind(NodeKind::Remote).expect("validated");
                run.note(format!(
                    "{}: diverting the challenge to {}",
                    target.label, remote.label
                ));
                let relayed = run.send(&target.label, &remote.label, delivered);
                let frame = respond_at_node(&mut run, remote, &relayed, &keys)?;
                let back = run.send(&remote.label, &target.label, frame);
                run.send(&target.label, "verifier", back)
            } else {
                let frame = respond_at_node(&mut run, target, &delivered, &keys)?;
                run.send(&target.label, "verifier", frame)
            };

            let Message::Response(resp) = Message::from_frame(&final_frame)? else {
                return Err(ScenarioError::Invalid(
                    "expected a response frame at the verifier".into(),
                ));
            };
            let accept = session.finish(&resp)?;
            run.note(format!(
                "verifier: {}",
                if accept {
                    "signature covers the extracted challenge; accept"
                } else if resp.aborted {
                    "prover aborted, vault did not open; reject"
                } else {
                    "response failed verification; reject"
                }
            ));
            accept
        }
        ProtocolKind::Naive => {
            let target = scenario.node_of_kind(NodeKind::Target).expect("validated");
            let (mut session, chal) = naive_verifier_start(master.pk, &mut run.rng);
            run.note("verifier: issued a bare nonce challenge".into());
            let chal_frame = Message::NaiveChallenge(chal.clone()).to_frame();
            let delivered = run.send("verifier", &target.label, chal_frame);

            let final_frame = if scenario.strategy.relays() {
                let remote = scenario.node_of_kind(NodeKind::Remote).expect("validated");
                run.note(format!(
                    "{}: diverting the challenge to {}",
                    target.label, remote.label
                ));
                run.send(&target.label, &remote.label, delivered);
                let rkeys = &keys[&remote.label];
                let resp = naive_prover_respond(&chal, rkeys);
                run.note(format!(
                    "{}: signed the nonce; no sensor involved",
                    remote.label
                ));
                let frame = Message::NaiveResponse(resp).to_frame();
                let back = run.send(&remote.label, &target.label, frame);
                run.send(&target.label, "verifier", back)
            } else {
                let tkeys = &keys[&target.label];
                let resp = naive_prover_respond(&chal, tkeys);
                run.note(format!(
                    "{}: signed the nonce; no sensor involved",
                    target.label
                ));
                let frame = Message::NaiveResponse(resp).to_frame();
                run.send(&target.label, "verifier", frame)
            };

            let Message::NaiveResponse(resp) = Message::from_frame(&final_frame)? else {
                return Err(ScenarioError::Invalid(
                    "expected a naive response frame at the verifier".into(),
                ));
            };
            let accept = session.finish(&resp)?;
            run.note(format!(
                "verifier: {}",
                if accept {
                    "credentialed signature over the nonce; accept (location unverified)"
                } else {
                    "response failed verification; reject"
                }
            ));
            accept
        }
        ProtocolKind::Proxy => {
            let proxy = scenario.node_of_kind(NodeKind::Proxy).expect("validated");
            let proxy_key = &proxy_keys[&proxy.label];
            let mut registry = IdentifiedRegistry::new();
            if scenario.proxy_registered {
                registry.register(&proxy_key.public_key());
                run.note(format!(
                    "verifier: {} is in the identified-device registry",
                    proxy.label
                ));
            } else {
                run.note(format!(
                    "verifier: {} is NOT in the identified-device registry",
                    proxy.label
                ));
            }
            let reading = run
                .sample(proxy)?
                .expect("validation pins the subject to the proxy sensor");
            let att = proxy_sample_and_sign(proxy_key, &reading);
            let frame = Message::ProxyAttestation(att).to_frame();
            let delivered = run.send(&proxy.label, "verifier", frame);
            let Message::ProxyAttestation(att) = Message::from_frame(&delivered)? else {
                return Err(ScenarioError::Invalid(
                    "expected a proxy attestation at the verifier".into(),
                ));
            };
            let accept = verifier_check_proxy(&registry, &att, &enrolled);
            run.note(format!(
                "verifier: {}",
                if accept {
                    "registered device attests to the enrolled subject; accept"
                } else {
                    "attestation not acceptable; reject"
                }
            ));
            accept
        }
    };

    Ok(ScenarioOutcome {
        decision: decision as u8,
        transcript: run.transcript,
        notes: run.notes,
        sensor_samples: run.sensor_samples,
    })
}

/// Let a credentialed node answer a helper-data frame with whatever its
/// own sensor can see.
fn respond_at_node(
    run: &mut Run<'_>,
    node: &NodeSpec,
    hd_frame: &[u8],
    keys: &HashMap<String, SessionKeyPair>,
) -> Result<Vec<u8>, ScenarioError> {
    let Message::HelperData(hd_msg) = Message::from_frame(hd_frame)? else {
        return Err(ScenarioError::Invalid(
            "expected a helper-data frame at the prover".into(),
        ));
    };
    let node_keys = &keys[&node.label];
    let resp = match run.sample(node)? {
        Some(reading) => {
            let r = prover_respond(&hd_msg, &reading, node_keys);
            run.note(format!(
                "{}: {}",
                node.label,
                if r.aborted {
                    "vault refused to open on the local reading; aborting"
                } else {
                    "vault opened; signing the extracted challenge"
                }
            ));
            r
        }
        None => {
            run.note(format!(
                "{}: no finger on the sensor; aborting",
                node.label
            ));
            abort_response(node_keys)
        }
    };
    Ok(Message::Response(resp).to_frame())
}

/// Verify that no frame anywhere in the run carries the subject's
/// template bytes: the biometric must never leave the verifier (vault
/// exchange) or the sampling device (proxy exchange) in recoverable
/// canonical form.
pub fn audit_sensor_routing(
    scenario: &Scenario,
    outcome: &ScenarioOutcome,
) -> Result<(), ScenarioError> {
    // The enrolled reading equals the true template under zero noise, but
    // audit both in case the scenario added noise.
    let needles = [
        scenario.human.true_template().canonical_bytes(),
        setup_run(scenario)?.enrolled.canonical_bytes(),
    ];

    for (hop, entry) in outcome.transcript.iter().enumerate() {
        for needle in &needles {
            if !needle.is_empty()
                && entry
                    .frame
                    .windows(needle.len())
                    .any(|win| win == needle.as_slice())
            {
                return Err(ScenarioError::Invalid(format!(
                    "hop {hop} ({} -> {}) carries subject template bytes",
                    entry.from, entry.to
                )));
            }
        }
    }
    Ok(())
}

/// Re-run the scenario and cross-check the recorded transcript hop by
/// hop. Divergence means the transcript does not belong to this scenario
/// and seed.
pub fn replay_transcript(
    scenario: &Scenario,
    transcript: &[TranscriptEntry],
) -> Result<ScenarioOutcome, ScenarioError> {
    let fresh = run_scenario(scenario)?;
    if fresh.transcript.len() != transcript.len() {
        return Err(ScenarioError::ReplayDivergence {
            hop: transcript.len().min(fresh.transcript.len()),
            msg: format!(
                "recorded {} hops, replay produced {}",
                transcript.len(),
                fresh.transcript.len()
            ),
        });
    }
    for (hop, (rec, new)) in transcript.iter().zip(&fresh.transcript).enumerate() {
        if rec != new {
            let msg = if rec.from != new.from || rec.to != new.to {
                format!(
                    "recorded {} -> {}, replay {} -> {}",
                    rec.from, rec.to, new.from, new.to
                )
            } else {
                "frame bytes differ".to_string()
            };
            return Err(ScenarioError::ReplayDivergence { hop, msg });
        }
    }
    Ok(fresh)
}

// ---------------------------------------------------------------------
// Scenario files
// ---------------------------------------------------------------------

/// Parse the scenario file format:
///
/// ```text
/// # comment
/// [scenario]
/// name = evil-twin-fv
/// protocol = fv
/// strategy = evil-twin
/// seed = 7
///
/// [human]
/// name = u
/// template_seed = 42
///
/// [node.dev]
/// kind = target
/// credentialed = true
/// sensor = subject
/// ```
///
/// Optional keys: `noise = <sigma_xy> <sigma_theta> <drop_rate>` and
/// `proxy_registered = true|false` in `[scenario]`, `cloned_available`
/// in `[human]`. Unknown keys and malformed lines are errors with their
/// line number.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let err = |line: usize, msg: String| ScenarioError::Parse { line, msg };

    #[derive(PartialEq)]
    enum Section {
        Preamble,
        Scenario,
        Human,
        Node(usize),
    }

    let mut name = None;
    let mut protocol = None;
    let mut strategy = AdversaryStrategy::None;
    let mut seed = None;
    let mut noise = NoiseModel::ZERO;
    let mut proxy_registered = true;
    let mut human_name = None;
    let mut template_seed = None;
    let mut cloned_available = false;
    let mut nodes: Vec<NodeSpec> = Vec::new();
    // Per-node bookkeeping for "kind missing" diagnostics.
    let mut node_kinds: Vec<Option<NodeKind>> = Vec::new();

    let mut section = Section::Preamble;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(header) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            section = match header {
                "scenario" => Section::Scenario,
                "human" => Section::Human,
                other => match other.strip_prefix("node.") {
                    Some(label) if !label.is_empty() => {
                        nodes.push(NodeSpec {
                            label: label.to_string(),
                            kind: NodeKind::Target, // overwritten; tracked below
                            credentialed: false,
                            sensor: SensorPresence::Nobody,
                        });
                        node_kinds.push(None);
                        Section::Node(nodes.len() - 1)
                    }
                    _ => return Err(err(line_no, format!("unknown section [{other}]"))),
                },
            };
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| err(line_no, format!("expected `key = value`, got {line:?}")))?;
        if value.is_empty() {
            return Err(err(line_no, format!("empty value for {key}")));
        }
        let parse_bool = |v: &str| match v {
            "true" => Ok(true),
            "false" => Ok(false),
            other => Err(err(line_no, format!("expected true/false, got {other:?}"))),
        };
        match &section {
            Section::Preamble => {
                return Err(err(line_no, "keys must appear inside a section".into()));
            }
            Section::Scenario => match key {
                "name" => name = Some(value.to_string()),
                "protocol" => {
                    protocol = Some(match value {
                        "naive" => ProtocolKind::Naive,
                        "fv" => ProtocolKind::FvBound,
                        "proxy" => ProtocolKind::Proxy,
                        other => {
                            return Err(err(line_no, format!("unknown protocol {other:?}")))
                        }
                    })
                }
                "strategy" => {
                    strategy = match value {
                        "none" => AdversaryStrategy::None,
                        "evil-twin" => AdversaryStrategy::EvilTwinRelay,
                        "cuckoo" => AdversaryStrategy::CuckooRelay,
                        "cuckoo-accomplice" => {
                            AdversaryStrategy::CuckooWithAccompliceChallenger
                        }
                        "cloned" => AdversaryStrategy::ClonedBiometric,
                        other => {
                            return Err(err(line_no, format!("unknown strategy {other:?}")))
                        }
                    }
                }
                "seed" => {
                    seed = Some(
                        value
                            .parse::<u64>()
                            .map_err(|_| err(line_no, format!("bad seed {value:?}")))?,
                    )
                }
                "noise" => {
                    let parts: Vec<&str> = value.split_whitespace().collect();
                    if parts.len() != 3 {
                        return Err(err(
                            line_no,
                            "noise takes three numbers: sigma_xy sigma_theta drop_rate".into(),
                        ));
                    }
                    let nums: Vec<f64> = parts
                        .iter()
                        .map(|p| p.parse::<f64>())
                        .collect::<Result<_, _>>()
                        .map_err(|_| err(line_no, format!("bad noise values {value:?}")))?;
                    noise = NoiseModel {
                        sigma_xy: nums[0],
                        sigma_theta: nums[1],
                        drop_rate: nums[2],
                    };
                }
                "proxy_registered" => proxy_registered = parse_bool(value)?,
                other => return Err(err(line_no, format!("unknown scenario key {other:?}"))),
            },
            Section::Human => match key {
                "name" => human_name = Some(value.to_string()),
                "template_seed" => {
                    template_seed = Some(
                        value
                            .parse::<u64>()
                            .map_err(|_| err(line_no, format!("bad template_seed {value:?}")))?,
                    )
                }
                "cloned_available" => cloned_available = parse_bool(value)?,
                other => return Err(err(line_no, format!("unknown human key {other:?}"))),
            },
            Section::Node(idx) => {
                let idx = *idx;
                match key {
                    "kind" => {
                        let kind = match value {
                            "target" => NodeKind::Target,
                            "remote" => NodeKind::Remote,
                            "proxy" => NodeKind::Proxy,
                            other => {
                                return Err(err(line_no, format!("unknown node kind {other:?}")))
                            }
                        };
                        nodes[idx].kind = kind;
                        node_kinds[idx] = Some(kind);
                    }
                    "credentialed" => nodes[idx].credentialed = parse_bool(value)?,
                    "sensor" => {
                        nodes[idx].sensor = match value {
                            "none" => SensorPresence::Nobody,
                            "subject" => SensorPresence::Subject,
                            "accomplice" => SensorPresence::Accomplice,
                            "clone" => SensorPresence::Clone,
                            other => {
                                return Err(err(line_no, format!("unknown sensor value {other:?}")))
                            }
                        }
                    }
                    other => return Err(err(line_no, format!("unknown node key {other:?}"))),
                }
            }
        }
    }

    let total_lines = text.lines().count();
    let missing = |what: &str| err(total_lines, format!("missing {what}"));
    for (node, kind) in nodes.iter().zip(&node_kinds) {
        if kind.is_none() {
            return Err(missing(&format!("kind for node {:?}", node.label)));
        }
    }
    let scenario = Scenario {
        name: name.ok_or_else(|| missing("scenario name"))?,
        protocol: protocol.ok_or_else(|| missing("scenario protocol"))?,
        strategy,
        human: HumanActor {
            name: human_name.ok_or_else(|| missing("human name"))?,
            template_seed: template_seed.ok_or_else(|| missing("human template_seed"))?,
            cloned_available,
        },
        nodes,
        noise,
        seed: seed.ok_or_else(|| missing("scenario seed"))?,
        proxy_registered,
    };
    scenario.validate()?;
    Ok(scenario)
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario(&text)
}

/// The canonical catalogue: every protocol/strategy pairing worth
/// demonstrating, with the decision each must produce.
pub fn scenario_matrix() -> Vec<(Scenario, u8)> {
    let human = |cloned| HumanActor {
        name: "u".to_string(),
        template_seed: 42,
        cloned_available: cloned,
    };
    let node = |label: &str, kind, credentialed, sensor| NodeSpec {
        label: label.to_string(),
        kind,
        credentialed,
        sensor,
    };
    let base = |name: &str, protocol, strategy, nodes, cloned, seed| Scenario {
        name: name.to_string(),
        protocol,
        strategy,
        human: human(cloned),
        nodes,
        noise: NoiseModel::ZERO,
        seed,
        proxy_registered: true,
    };
    use AdversaryStrategy as S;
    use NodeKind as K;
    use SensorPresence as P;

    let mut rows = Vec::new();
    rows.push((
        base(
            "naive-honest",
            ProtocolKind::Naive,
            S::None,
            vec![node("dev", K::Target, true, P::Subject)],
            false,
            1001,
        ),
        1,
    ));
    rows.push((
        base(
            "naive-evil-twin",
            ProtocolKind::Naive,
            S::EvilTwinRelay,
            vec![
                node("dev", K::Target, true, P::Subject),
                node("twin", K::Remote, true, P::Nobody),
            ],
            false,
            1002,
        ),
        1, // the baseline cannot tell the twin from the target
    ));
    rows.push((
        base(
            "fv-honest",
            ProtocolKind::FvBound,
            S::None,
            vec![node("dev", K::Target, true, P::Subject)],
            false,
            1003,
        ),
        1,
    ));
    rows.push((
        base(
            "fv-evil-twin",
            ProtocolKind::FvBound,
            S::EvilTwinRelay,
            vec![
                node("dev", K::Target, true, P::Subject),
                node("twin", K::Remote, true, P::Nobody),
            ],
            false,
            1004,
        ),
        0, // the twin has no subject at its sensor
    ));
    rows.push((
        base(
            "fv-cuckoo",
            ProtocolKind::FvBound,
            S::CuckooRelay,
            vec![
                node("shell", K::Target, false, P::Subject),
                node("nest", K::Remote, true, P::Nobody),
            ],
            false,
            1005,
        ),
        0,
    ));
    rows.push((
        base(
            "fv-cuckoo-accomplice",
            ProtocolKind::FvBound,
            S::CuckooWithAccompliceChallenger,
            vec![
                node("shell", K::Target, false, P::Subject),
                node("nest", K::Remote, true, P::Accomplice),
            ],
            false,
            1006,
        ),
        0, // the accomplice's finger opens nothing
    ));
    rows.push((
        base(
            "fv-cloned-biometric",
            ProtocolKind::FvBound,
            S::ClonedBiometric,
            vec![
                node("dev", K::Target, true, P::Subject),
                node("lab", K::Remote, true, P::Clone),
            ],
            true,
            1007,
        ),
        1, // a working clone defeats the binding; known boundary
    ));
    rows.push((
        base(
            "proxy-registered",
            ProtocolKind::Proxy,
            S::None,
            vec![node("phone", K::Proxy, false, P::Subject)],
            false,
            1008,
        ),
        1,
    ));
    let mut unregistered = base(
        "proxy-unregistered",
        ProtocolKind::Proxy,
        S::None,
        vec![node("phone", K::Proxy, false, P::Subject)],
        false,
        1009,
    );
    unregistered.proxy_registered = false;
    rows.push((unregistered, 0));
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_produces_the_expected_decisions() {
        for (scenario, expected) in scenario_matrix() {
            let outcome = run_scenario(&scenario).unwrap();
            assert_eq!(
                outcome.decision, expected,
                "scenario {}:\n{}",
                scenario.name,
                outcome.report(&scenario)
            );
        }
    }

    #[test]
    fn runs_are_deterministic() {
        for (scenario, _) in scenario_matrix() {
            let a = run_scenario(&scenario).unwrap();
            let b = run_scenario(&scenario).unwrap();
            assert_eq!(a, b, "scenario {} not reproducible", scenario.name);
        }
    }

    #[test]
    fn different_seeds_change_the_frames_not_the_decision() {
        let (mut scenario, expected) = scenario_matrix().remove(3); // fv-evil-twin
        let first = run_scenario(&scenario).unwrap();
        scenario.seed += 1;
        let second = run_scenario(&scenario).unwrap();
        assert_eq!(first.decision, expected);
        assert_eq!(second.decision, expected);
        assert_ne!(
            first.transcript[0].frame, second.transcript[0].frame,
            "fresh seed, fresh challenge"
        );
    }

    #[test]
    fn no_frame_carries_subject_template_bytes() {
        for (scenario, _) in scenario_matrix() {
            let outcome = run_scenario(&scenario).unwrap();
            audit_sensor_routing(&scenario, &outcome).unwrap();
        }
    }

    #[test]
    fn relay_hops_appear_in_the_transcript() {
        let (scenario, _) = scenario_matrix().remove(3); // fv-evil-twin
        let outcome = run_scenario(&scenario).unwrap();
        let hops: Vec<(String, String)> = outcome
            .transcript
            .iter()
            .map(|e| (e.from.clone(), e.to.clone()))
            .collect();
        let expect = [
            ("verifier", "dev"),
            ("dev", "twin"),
            ("twin", "dev"),
            ("dev", "verifier"),
        ];
        assert_eq!(
            hops,
            expect
                .iter()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect::<Vec<_>>()
        );
        // The relayed helper data reaches the twin byte-identical.
        assert_eq!(outcome.transcript[0].frame, outcome.transcript[1].frame);
    }

    #[test]
    fn replay_accepts_genuine_and_rejects_doctored_transcripts() {
        let (scenario, _) = scenario_matrix().remove(2); // fv-honest
        let outcome = run_scenario(&scenario).unwrap();
        let replayed = replay_transcript(&scenario, &outcome.transcript).unwrap();
        assert_eq!(replayed, outcome);

        let mut doctored = outcome.transcript.clone();
        doctored[0].frame[6] ^= 1;
        assert!(matches!(
            replay_transcript(&scenario, &doctored),
            Err(ScenarioError::ReplayDivergence { hop: 0, .. })
        ));

        let truncated = &outcome.transcript[..1];
        assert!(matches!(
            replay_transcript(&scenario, truncated),
            Err(ScenarioError::ReplayDivergence { .. })
        ));
    }

    #[test]
    fn report_names_the_decision_and_every_hop() {
        let (scenario, _) = scenario_matrix().remove(4); // fv-cuckoo
        let outcome = run_scenario(&scenario).unwrap();
        let report = outcome.report(&scenario);
        assert!(report.contains("decision=0"), "{report}");
        assert!(report.contains("hop 0: verifier -> shell"), "{report}");
        assert!(report.contains("helper-data"), "{report}");
        assert!(report.contains("sensor samples:"), "{report}");
    }

    #[test]
    fn validation_rejects_inconsistent_topologies() {
        let (mut s, _) = scenario_matrix().remove(4); // fv-cuckoo
        s.nodes[0].credentialed = true; // a cuckoo shell with credentials
        assert!(matches!(run_scenario(&s), Err(ScenarioError::Invalid(_))));

        let (mut s, _) = scenario_matrix().remove(6); // fv-cloned-biometric
        s.human.cloned_available = false;
        assert!(matches!(run_scenario(&s), Err(ScenarioError::Invalid(_))));

        let (mut s, _) = scenario_matrix().remove(3); // fv-evil-twin
        s.nodes.pop(); // drop the remote endpoint
        assert!(matches!(run_scenario(&s), Err(ScenarioError::Invalid(_))));

        let (mut s, _) = scenario_matrix().remove(0); // naive-honest
        s.strategy = AdversaryStrategy::CuckooRelay;
        assert!(matches!(run_scenario(&s), Err(ScenarioError::Invalid(_))));

        let (mut s, _) = scenario_matrix().remove(0);
        s.nodes[0].label = "verifier".into();
        assert!(matches!(run_scenario(&s), Err(ScenarioError::Invalid(_))));
    }

    const SAMPLE_FILE: &str = "\
# a relayed run against the vault-bound exchange
[scenario]
name = evil-twin-fv
protocol = fv
strategy = evil-twin
seed = 7

[human]
name = u
template_seed = 42

[node.dev]
kind = target
credentialed = true
sensor = subject

[node.twin]
kind = remote
credentialed = true
sensor = none
";

    #[test]
    fn scenario_files_parse_to_the_expected_structure() {
        let s = parse_scenario(SAMPLE_FILE).unwrap();
        assert_eq!(s.name, "evil-twin-fv");
        assert_eq!(s.protocol, ProtocolKind::FvBound);
        assert_eq!(s.strategy, AdversaryStrategy::EvilTwinRelay);
        assert_eq!(s.seed, 7);
        assert_eq!(s.noise, NoiseModel::ZERO);
        assert_eq!(s.nodes.len(), 2);
        assert_eq!(s.nodes[1].label, "twin");
        assert_eq!(s.nodes[1].kind, NodeKind::Remote);
        assert_eq!(run_scenario(&s).unwrap().decision, 0);
    }

    #[test]
    fn scenario_parser_reports_line_numbers() {
        let bad_key = SAMPLE_FILE.replace("strategy = evil-twin", "tactic = evil-twin");
        match parse_scenario(&bad_key) {
            Err(ScenarioError::Parse { line: 5, msg }) => {
                assert!(msg.contains("tactic"), "{msg}")
            }
            other => panic!("expected parse error at line 5, got {other:?}"),
        }

        let bad_value = SAMPLE_FILE.replace("protocol = fv", "protocol = quantum");
        assert!(matches!(
            parse_scenario(&bad_value),
            Err(ScenarioError::Parse { line: 4, .. })
        ));

        let no_section = "name = x\n";
        assert!(matches!(
            parse_scenario(no_section),
            Err(ScenarioError::Parse { line: 1, .. })
        ));

        let missing_seed = SAMPLE_FILE.replace("seed = 7\n", "");
        assert!(matches!(
            parse_scenario(&missing_seed),
            Err(ScenarioError::Parse { .. })
        ));

        let bad_noise = SAMPLE_FILE.replace("seed = 7", "seed = 7\nnoise = 1 2");
        assert!(matches!(
            parse_scenario(&bad_noise),
            Err(ScenarioError::Parse { line: 7, .. })
        ));
    }

    #[test]
    fn noisy_sensors_still_identify_the_subject() {
        // Mild noise on every sample: enrollment and the device reading
        // differ, yet the vault still opens.
        let (mut scenario, _) = scenario_matrix().remove(2); // fv-honest
        scenario.noise = NoiseModel {
            sigma_xy: 1.0,
            sigma_theta: 2.0,
            drop_rate: 0.0,
        };
        let outcome = run_scenario(&scenario).unwrap();
        assert_eq!(outcome.decision, 1, "{}", outcome.report(&scenario));
        assert_eq!(outcome.sensor_samples, 2);
    }
}
