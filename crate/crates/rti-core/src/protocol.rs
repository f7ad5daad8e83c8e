//! Wire messages and the identification exchanges built on them.
//!
//! Three exchanges share one frame format:
//!
//! * **Vault-bound identification** — the verifier locks a fresh random
//!   challenge under the user's enrolled template and sends only the
//!   helper data. A device can sign the challenge only if a matching
//!   finger is on *its* sensor, so possession of valid attestation keys
//!   alone (an "evil twin" elsewhere) is not enough.
//! * **Proxy attestation** — a previously identified device samples the
//!   user and signs what it saw; the verifier checks the signature
//!   against its own enrolled copy and the signer against a registry.
//! * **Naive baseline** — a bare challenge/response with no biometric
//!   binding. Kept as the control: any device holding valid credentials
//!   passes, wherever it is.
//!
//! Frames are `tag (1 byte) || length (4 bytes, big-endian) || payload`.
//! The challenge itself is never a frame payload in the vault-bound
//! exchange; it exists only inside the two endpoints.

use crate::cryptoshim::{
    group_verify, sign, verify, CryptoError, PublicKey, SecretKey, SessionKeyPair, Signature,
    PUBLIC_KEY_LEN, SIGNATURE_LEN,
};
use crate::vault::{
    deserialize_vault, fv_gen, fv_open, serialize_vault, Challenge, HelperData, VaultError,
    VaultParams,
};
use crate::biotemplate::Template;
use rand::Rng;
use std::collections::HashSet;
use thiserror::Error;

pub const TAG_HELPER_DATA: u8 = 0x01;
pub const TAG_RESPONSE: u8 = 0x02;
pub const TAG_PROXY_ATTESTATION: u8 = 0x03;
pub const TAG_NAIVE_CHALLENGE: u8 = 0x10;
pub const TAG_NAIVE_RESPONSE: u8 = 0x11;

pub const NONCE_LEN: usize = 32;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("frame truncated: need at least {need} bytes, have {have}")]
    FrameTruncated { need: usize, have: usize },
    #[error("frame declares {declared} payload bytes but carries {carried}")]
    FrameLengthMismatch { declared: usize, carried: usize },
    #[error("unknown frame tag {0:#04x}")]
    UnknownTag(u8),
    #[error("tag {tag:#04x} payload must be {expected} bytes, got {got}")]
    BadPayloadLength { tag: u8, expected: usize, got: usize },
    #[error("helper data payload is not UTF-8")]
    PayloadNotUtf8,
    #[error("bad flag byte {0:#04x} (expected 0 or 1)")]
    BadFlag(u8),
    #[error("session already finished")]
    SessionFinished,
    #[error(transparent)]
    Vault(#[from] VaultError),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}

/// First verifier->prover frame of the vault-bound exchange.
#[derive(Debug, Clone, PartialEq)]
pub struct HdMessage {
    pub hd: HelperData,
}

/// Prover->verifier reply. `aborted` reports that the vault refused to
/// open; the sentinel signature fills the slot so the frame shape does
/// not leak *why*. Key material is attestation identity, not a secret.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResponseMessage {
    pub aborted: bool,
    pub pk: PublicKey,
    pub group_cred: Signature,
    pub sigma: Signature,
}

/// A previously identified device vouching for what its sensor saw.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProxyAttestation {
    pub pk: PublicKey,
    pub sigma: Signature,
}

/// The baseline's challenge: a bare nonce, no biometric binding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NaiveChallenge {
    pub nonce: [u8; NONCE_LEN],
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NaiveResponse {
    pub pk: PublicKey,
    pub group_cred: Signature,
    pub sigma: Signature,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    HelperData(HdMessage),
    Response(ResponseMessage),
    ProxyAttestation(ProxyAttestation),
    NaiveChallenge(NaiveChallenge),
    NaiveResponse(NaiveResponse),
}

fn frame(tag: u8, payload: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(5 + payload.len());
    out.push(tag);
    out.extend_from_slice(&(payload.len() as u32).to_be_bytes());
    out.extend_from_slice(payload);
    out
}

fn expect_len(tag: u8, payload: &[u8], expected: usize) -> Result<(), ProtocolError> {
    if payload.len() != expected {
        return Err(ProtocolError::BadPayloadLength {
            tag,
            expected,
            got: payload.len(),
        });
    }
    Ok(())
}

fn read_flag(byte: u8) -> Result<bool, ProtocolError> {
    match byte {
        0 => Ok(false),
        1 => Ok(true),
        other => Err(ProtocolError::BadFlag(other)),
    }
}

impl Message {
    pub fn tag(&self) -> u8 {
        match self {
            Message::HelperData(_) => TAG_HELPER_DATA,
            Message::Response(_) => TAG_RESPONSE,
            Message::ProxyAttestation(_) => TAG_PROXY_ATTESTATION,
            Message::NaiveChallenge(_) => TAG_NAIVE_CHALLENGE,
            Message::NaiveResponse(_) => TAG_NAIVE_RESPONSE,
        }
    }

    /// Encode as one complete frame.
    pub fn to_frame(&self) -> Vec<u8> {
        match self {
            Message::HelperData(m) => frame(TAG_HELPER_DATA, serialize_vault(&m.hd).as_bytes()),
            Message::Response(m) => {
                let mut p = Vec::with_capacity(1 + PUBLIC_KEY_LEN + 2 * SIGNATURE_LEN);
                p.push(m.aborted as u8);
                p.extend_from_slice(m.pk.as_bytes());
                p.extend_from_slice(m.group_cred.as_bytes());
                p.extend_from_slice(m.sigma.as_bytes());
                frame(TAG_RESPONSE, &p)
            }
            Message::ProxyAttestation(m) => {
                let mut p = Vec::with_capacity(PUBLIC_KEY_LEN + SIGNATURE_LEN);
                p.extend_from_slice(m.pk.as_bytes());
                p.extend_from_slice(m.sigma.as_bytes());
                frame(TAG_PROXY_ATTESTATION, &p)
            }
            Message::NaiveChallenge(m) => frame(TAG_NAIVE_CHALLENGE, &m.nonce),
            Message::NaiveResponse(m) => {
                let mut p = Vec::with_capacity(PUBLIC_KEY_LEN + 2 * SIGNATURE_LEN);
                p.extend_from_slice(m.pk.as_bytes());
                p.extend_from_slice(m.group_cred.as_bytes());
                p.extend_from_slice(m.sigma.as_bytes());
                frame(TAG_NAIVE_RESPONSE, &p)
            }
        }
    }

    /// Decode exactly one frame; trailing bytes are an error.
    pub fn from_frame(bytes: &[u8]) -> Result<Message, ProtocolError> {
        if bytes.len() < 5 {
            return Err(ProtocolError::FrameTruncated {
                need: 5,
                have: bytes.len(),
            });
        }
        let tag = bytes[0];
        let declared = u32::from_be_bytes(bytes[1..5].try_into().expect("4 bytes")) as usize;
        let payload = &bytes[5..];
        if payload.len() != declared {
            return Err(ProtocolError::FrameLengthMismatch {
                declared,
                carried: payload.len(),
            });
        }
        match tag {
            TAG_HELPER_DATA => {
                let text =
                    std::str::from_utf8(payload).map_err(|_| ProtocolError::PayloadNotUtf8)?;
                Ok(Message::HelperData(HdMessage {
                    hd: deserialize_vault(text)?,
                }))
            }
            TAG_RESPONSE => {
                expect_len(tag, payload, 1 + PUBLIC_KEY_LEN + 2 * SIGNATURE_LEN)?;
                let aborted = read_flag(payload[0])?;
                let pk = PublicKey::from_bytes(&payload[1..33])?;
                let group_cred = Signature::from_bytes(&payload[33..97]);
                let sigma = Signature::from_bytes(&payload[97..161]);
                Ok(Message::Response(ResponseMessage {
                    aborted,
                    pk,
                    group_cred,
                    sigma,
                }))
            }
            TAG_PROXY_ATTESTATION => {
                expect_len(tag, payload, PUBLIC_KEY_LEN + SIGNATURE_LEN)?;
                let pk = PublicKey::from_bytes(&payload[..32])?;
                let sigma = Signature::from_bytes(&payload[32..96]);
                Ok(Message::ProxyAttestation(ProxyAttestation { pk, sigma }))
            }
            TAG_NAIVE_CHALLENGE => {
                expect_len(tag, payload, NONCE_LEN)?;
                let nonce = payload.try_into().expect("length checked");
                Ok(Message::NaiveChallenge(NaiveChallenge { nonce }))
            }
            TAG_NAIVE_RESPONSE => {
                expect_len(tag, payload, PUBLIC_KEY_LEN + 2 * SIGNATURE_LEN)?;
                let pk = PublicKey::from_bytes(&payload[..32])?;
                let group_cred = Signature::from_bytes(&payload[32..96]);
                let sigma = Signature::from_bytes(&payload[96..160]);
                Ok(Message::NaiveResponse(NaiveResponse {
                    pk,
                    group_cred,
                    sigma,
                }))
            }
            other => Err(ProtocolError::UnknownTag(other)),
        }
    }
}

/// Verifier state for one vault-bound exchange. Single-use: `finish`
/// consumes the session's freshness.
pub struct VerifierSession {
    chal: Challenge,
    master_pk: PublicKey,
    done: bool,
}

impl VerifierSession {
    /// The challenge this session locked away. Exposed for audits and
    /// tests; it never crosses the wire.
    pub fn challenge(&self) -> &Challenge {
        &self.chal
    }

    /// Judge the prover's reply: the response must not be an abort, the
    /// key must carry a valid group credential, and the signature must
    /// cover this session's challenge. Returns the accept/reject
    /// decision; a second call is a state error, never a decision.
    pub fn finish(&mut self, resp: &ResponseMessage) -> Result<bool, ProtocolError> {
        if self.done {
            return Err(ProtocolError::SessionFinished);
        }
        self.done = true;
        if resp.aborted {
            return Ok(false);
        }
        let credentialed = group_verify(&self.master_pk, &resp.pk, &resp.group_cred);
        let bound = verify(&resp.pk, &resp.sigma, self.chal.as_bytes());
        Ok(credentialed && bound)
    }
}

/// Start a vault-bound exchange: draw a fresh challenge, lock it under
/// the user's enrolled template, and emit the helper-data message.
pub fn verifier_start(
    enrolled: &Template,
    params: &VaultParams,
    master_pk: PublicKey,
    rng: &mut impl Rng,
) -> Result<(VerifierSession, HdMessage), VaultError> {
    let chal = Challenge::sample(params.challenge_bits(), rng);
    let hd = fv_gen(&chal, enrolled, params, rng)?;
    Ok((
        VerifierSession {
            chal,
            master_pk,
            done: false,
        },
        HdMessage { hd },
    ))
}

/// Prover side: try to open the vault with the local sensor's reading
/// and sign what came out. A failed open produces an abort response with
/// the sentinel signature — the device refuses to attest to a challenge
/// it could not extract.
pub fn prover_respond(
    hd_msg: &HdMessage,
    reading: &Template,
    keys: &SessionKeyPair,
) -> ResponseMessage {
    match fv_open(&hd_msg.hd, reading) {
        Ok(chal) => ResponseMessage {
            aborted: false,
            pk: keys.pk,
            group_cred: keys.group_cred.clone(),
            sigma: sign(keys.secret(), chal.as_bytes()),
        },
        Err(_) => ResponseMessage {
            aborted: true,
            pk: keys.pk,
            group_cred: keys.group_cred.clone(),
            sigma: Signature::abort_sentinel(),
        },
    }
}

/// Devices whose root of trust has already been identified; proxies
/// attest on the strength of this prior identification, so membership is
/// by exact public key.
#[derive(Debug, Default, Clone)]
pub struct IdentifiedRegistry {
    pks: HashSet<[u8; PUBLIC_KEY_LEN]>,
}

impl IdentifiedRegistry {
    pub fn new() -> IdentifiedRegistry {
        IdentifiedRegistry::default()
    }

    pub fn register(&mut self, pk: &PublicKey) {
        self.pks.insert(*pk.as_bytes());
    }

    pub fn contains(&self, pk: &PublicKey) -> bool {
        self.pks.contains(pk.as_bytes())
    }
}

/// Proxy side: sign the template the proxy's own sensor sampled.
pub fn proxy_sample_and_sign(proxy_key: &SecretKey, sampled: &Template) -> ProxyAttestation {
    ProxyAttestation {
        pk: proxy_key.public_key(),
        sigma: sign(proxy_key, &sampled.canonical_bytes()),
    }
}

/// Verifier side of the proxy exchange: the signer must already be
/// identified, and the signature must cover the verifier's own enrolled
/// copy of the user — a proxy that sampled someone else fails here.
pub fn verifier_check_proxy(
    registry: &IdentifiedRegistry,
    att: &ProxyAttestation,
    enrolled: &Template,
) -> bool {
    registry.contains(&att.pk) && verify(&att.pk, &att.sigma, &enrolled.canonical_bytes())
}

/// Verifier state for one naive exchange.
pub struct NaiveSession {
    nonce: [u8; NONCE_LEN],
    master_pk: PublicKey,
    done: bool,
}

impl NaiveSession {
    pub fn nonce(&self) -> &[u8; NONCE_LEN] {
        &self.nonce
    }

    pub fn finish(&mut self, resp: &NaiveResponse) -> Result<bool, ProtocolError> {
        if self.done {
            return Err(ProtocolError::SessionFinished);
        }
        self.done = true;
        let credentialed = group_verify(&self.master_pk, &resp.pk, &resp.group_cred);
        let bound = verify(&resp.pk, &resp.sigma, &self.nonce);
        Ok(credentialed && bound)
    }
}

pub fn naive_verifier_start(
    master_pk: PublicKey,
    rng: &mut impl Rng,
) -> (NaiveSession, NaiveChallenge) {
    let mut nonce = [0u8; NONCE_LEN];
    rng.fill(&mut nonce);
    (
        NaiveSession {
            nonce,
            master_pk,
            done: false,
        },
        NaiveChallenge { nonce },
    )
}

/// The baseline prover: sign the nonce. Nothing ties this step to a
/// human at the device, which is exactly the weakness the vault-bound
/// exchange removes.
pub fn naive_prover_respond(chal: &NaiveChallenge, keys: &SessionKeyPair) -> NaiveResponse {
    NaiveResponse {
        pk: keys.pk,
        group_cred: keys.group_cred.clone(),
        sigma: sign(keys.secret(), &chal.nonce),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::biotemplate::random_impostor_template;
    use crate::cryptoshim::{rot_gen_keys, GroupMaster};
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    struct Setup {
        master: GroupMaster,
        keys: SessionKeyPair,
        enrolled: Template,
        params: VaultParams,
        rng: ChaCha12Rng,
    }

    fn setup(seed: u64) -> Setup {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let master = GroupMaster::generate(&mut rng);
        let keys = rot_gen_keys(master.secret(), &mut rng);
        let enrolled = random_impostor_template(20, &mut rng);
        Setup {
            master,
            keys,
            enrolled,
            params: VaultParams::with_defaults(),
            rng,
        }
    }

    #[test]
    fn frames_roundtrip_every_message_kind() {
        let mut s = setup(200);
        let (_, hd_msg) =
            verifier_start(&s.enrolled, &s.params, s.master.pk, &mut s.rng).unwrap();
        let resp = prover_respond(&hd_msg, &s.enrolled, &s.keys);
        let att = proxy_sample_and_sign(s.keys.secret(), &s.enrolled);
        let (_, nchal) = naive_verifier_start(s.master.pk, &mut s.rng);
        let nresp = naive_prover_respond(&nchal, &s.keys);

        let messages = [
            Message::HelperData(hd_msg),
            Message::Response(resp),
            Message::ProxyAttestation(att),
            Message::NaiveChallenge(nchal),
            Message::NaiveResponse(nresp),
        ];
        for msg in messages {
            let bytes = msg.to_frame();
            assert_eq!(bytes[0], msg.tag());
            let declared =
                u32::from_be_bytes(bytes[1..5].try_into().unwrap()) as usize;
            assert_eq!(declared, bytes.len() - 5);
            assert_eq!(Message::from_frame(&bytes).unwrap(), msg);
        }
    }

    #[test]
    fn honest_exchange_accepts() {
        let mut s = setup(201);
        let (mut session, hd_msg) =
            verifier_start(&s.enrolled, &s.params, s.master.pk, &mut s.rng).unwrap();
        // Through the wire and back, like the real thing.
        let wire = Message::HelperData(hd_msg).to_frame();
        let Message::HelperData(received) = Message::from_frame(&wire).unwrap() else {
            panic!("wrong message kind");
        };
        let resp = prover_respond(&received, &s.enrolled, &s.keys);
        assert!(!resp.aborted);
        assert!(session.finish(&resp).unwrap());
    }

    #[test]
    fn impostor_reading_aborts_and_is_rejected() {
        let mut s = setup(202);
        let (mut session, hd_msg) =
            verifier_start(&s.enrolled, &s.params, s.master.pk, &mut s.rng).unwrap();
        let impostor = random_impostor_template(20, &mut s.rng);
        let resp = prover_respond(&hd_msg, &impostor, &s.keys);
        assert!(resp.aborted);
        assert_eq!(resp.sigma, Signature::abort_sentinel());
        assert!(!session.finish(&resp).unwrap());
    }

    #[test]
    fn tampered_signature_is_rejected() {
        let mut s = setup(203);
        let (mut session, hd_msg) =
            verifier_start(&s.enrolled, &s.params, s.master.pk, &mut s.rng).unwrap();
        let resp = prover_respond(&hd_msg, &s.enrolled, &s.keys);
        let mut sigma = resp.sigma.as_bytes().to_vec();
        sigma[10] ^= 0x40;
        let forged = ResponseMessage {
            sigma: Signature::from_bytes(&sigma),
            ..resp
        };
        assert!(!session.finish(&forged).unwrap());
    }

    #[test]
    fn foreign_group_credential_is_rejected() {
        let mut s = setup(204);
        // Keys credentialed by a *different* master.
        let other_master = GroupMaster::generate(&mut s.rng);
        let rogue = rot_gen_keys(other_master.secret(), &mut s.rng);
        let (mut session, hd_msg) =
            verifier_start(&s.enrolled, &s.params, s.master.pk, &mut s.rng).unwrap();
        let resp = prover_respond(&hd_msg, &s.enrolled, &rogue);
        assert!(!resp.aborted, "vault opens; the credential is the problem");
        assert!(!session.finish(&resp).unwrap());
    }

    #[test]
    fn replayed_response_fails_the_fresh_session() {
        let mut s = setup(205);
        let (mut first, hd1) =
            verifier_start(&s.enrolled, &s.params, s.master.pk, &mut s.rng).unwrap();
        let resp1 = prover_respond(&hd1, &s.enrolled, &s.keys);
        assert!(first.finish(&resp1).unwrap());

        // A new session draws a new challenge; the old signature is stale.
        let (mut second, hd2) =
            verifier_start(&s.enrolled, &s.params, s.master.pk, &mut s.rng).unwrap();
        assert_ne!(
            hd2.hd.params.khash, hd1.hd.params.khash,
            "fresh challenge per session"
        );
        assert!(!second.finish(&resp1).unwrap());
    }

    #[test]
    fn finishing_twice_is_a_state_error_not_a_decision() {
        let mut s = setup(206);
        let (mut session, hd_msg) =
            verifier_start(&s.enrolled, &s.params, s.master.pk, &mut s.rng).unwrap();
        let resp = prover_respond(&hd_msg, &s.enrolled, &s.keys);
        assert!(session.finish(&resp).unwrap());
        assert!(matches!(
            session.finish(&resp),
            Err(ProtocolError::SessionFinished)
        ));
    }

    #[test]
    fn malformed_frames_are_errors_not_aborts() {
        assert!(matches!(
            Message::from_frame(&[0x01, 0, 0]),
            Err(ProtocolError::FrameTruncated { .. })
        ));
        assert!(matches!(
            Message::from_frame(&[0x02, 0, 0, 0, 9, 1, 2]),
            Err(ProtocolError::FrameLengthMismatch {
                declared: 9,
                carried: 2
            })
        ));
        assert!(matches!(
            Message::from_frame(&[0x7f, 0, 0, 0, 0]),
            Err(ProtocolError::UnknownTag(0x7f))
        ));
        assert!(matches!(
            Message::from_frame(&[0x02, 0, 0, 0, 3, 1, 2, 3]),
            Err(ProtocolError::BadPayloadLength { tag: 0x02, .. })
        ));
        // Helper-data payload that is not a valid vault file.
        let junk = frame(TAG_HELPER_DATA, b"FVAULT9\nnope\n");
        assert!(matches!(
            Message::from_frame(&junk),
            Err(ProtocolError::Vault(VaultError::Parse { line: 1, .. }))
        ));
        // Response with a flag byte outside {0, 1}.
        let mut s = setup(207);
        let (_, hd_msg) =
            verifier_start(&s.enrolled, &s.params, s.master.pk, &mut s.rng).unwrap();
        let resp = prover_respond(&hd_msg, &s.enrolled, &s.keys);
        let mut bytes = Message::Response(resp).to_frame();
        bytes[5] = 2;
        assert!(matches!(
            Message::from_frame(&bytes),
            Err(ProtocolError::BadFlag(2))
        ));
    }

    #[test]
    fn challenge_bytes_never_cross_the_wire() {
        let mut s = setup(208);
        let (session, hd_msg) =
            verifier_start(&s.enrolled, &s.params, s.master.pk, &mut s.rng).unwrap();
        let resp = prover_respond(&hd_msg, &s.enrolled, &s.keys);
        let chal = session.challenge().as_bytes().to_vec();
        assert_eq!(chal.len(), 30, "240-bit challenge");
        for bytes in [
            Message::HelperData(hd_msg).to_frame(),
            Message::Response(resp).to_frame(),
        ] {
            assert!(
                !bytes.windows(chal.len()).any(|win| win == chal),
                "challenge bytes leaked into a frame"
            );
        }
    }

    #[test]
    fn proxy_attestation_honors_registry_and_template() {
        let mut s = setup(209);
        let proxy_key = SecretKey::generate(&mut s.rng);
        let mut registry = IdentifiedRegistry::new();
        registry.register(&proxy_key.public_key());

        let att = proxy_sample_and_sign(&proxy_key, &s.enrolled);
        assert!(verifier_check_proxy(&registry, &att, &s.enrolled));

        // Unregistered signer: same signature, empty registry.
        assert!(!verifier_check_proxy(
            &IdentifiedRegistry::new(),
            &att,
            &s.enrolled
        ));

        // Registered signer but it sampled a different person.
        let other_person = random_impostor_template(20, &mut s.rng);
        let wrong = proxy_sample_and_sign(&proxy_key, &other_person);
        assert!(!verifier_check_proxy(&registry, &wrong, &s.enrolled));

        // Tampered signature.
        let mut sig = att.sigma.as_bytes().to_vec();
        sig[0] ^= 1;
        let forged = ProxyAttestation {
            pk: att.pk,
            sigma: Signature::from_bytes(&sig),
        };
        assert!(!verifier_check_proxy(&registry, &forged, &s.enrolled));
    }

    #[test]
    fn naive_exchange_accepts_any_credentialed_key() {
        let mut s = setup(210);
        let (mut session, chal) = naive_verifier_start(s.master.pk, &mut s.rng);
        let resp = naive_prover_respond(&chal, &s.keys);
        assert!(session.finish(&resp).unwrap());

        // A different credentialed device — nowhere near any sensor —
        // passes just as easily. This is the baseline's flaw.
        let far_away = rot_gen_keys(s.master.secret(), &mut s.rng);
        let (mut session2, chal2) = naive_verifier_start(s.master.pk, &mut s.rng);
        let remote = naive_prover_respond(&chal2, &far_away);
        assert!(session2.finish(&remote).unwrap());

        // But an uncredentialed key still fails.
        let outsider_master = GroupMaster::generate(&mut s.rng);
        let outsider = rot_gen_keys(outsider_master.secret(), &mut s.rng);
        let (mut session3, chal3) = naive_verifier_start(s.master.pk, &mut s.rng);
        assert!(!session3.finish(&naive_prover_respond(&chal3, &outsider)).unwrap());
    }

    #[test]
    fn naive_nonces_are_fresh_per_session() {
        let mut s = setup(211);
        let (s1, c1) = naive_verifier_start(s.master.pk, &mut s.rng);
        let (s2, c2) = naive_verifier_start(s.master.pk, &mut s.rng);
        assert_ne!(c1.nonce, c2.nonce);
        assert_eq!(s1.nonce(), &c1.nonce);
        assert_eq!(s2.nonce(), &c2.nonce);
    }
}
