//! Prime-order cyclic groups with two generators G and H, behind one
//! backend-agnostic interface.
//!
//! Two backends are provided:
//!
//! * `TRANSPARENT` — the additive group `Z_7919` with G = 1 and H = 5657.
//!   Discrete logs are trivially known, which makes it a brute-force oracle
//!   for everything built on top (binding is intentionally not modeled).
//! * `TOY_CURVE` — a short-Weierstrass curve over `F_1031` of prime order
//!   971, where H is derived by hash-to-group so nobody knows `log_G(H)`.
//!
//! All values are immutable and `Copy`; operations are pure functions.
//! Mixing values from different backends is reported as an error instead of
//! silently producing nonsense.

mod curve;

pub use curve::CurvePoint;

use sha2::{Digest, Sha256};
use std::cmp::Ordering;
use std::fmt;
use std::sync::OnceLock;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroupError {
    #[error("backend mismatch: {left} vs {right}")]
    BackendMismatch { left: String, right: String },
    #[error("hash-to-group tag must be non-empty")]
    EmptyTag,
    #[error("zero has no inverse")]
    ZeroInverse,
    #[error("invalid backend parameters: {0}")]
    BadParameters(String),
    #[error("cannot decode {what}: {detail}")]
    Decode { what: &'static str, detail: String },
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
enum BackendKind {
    Modular { order: u64, g: u64, h: u64 },
    ToyCurve,
}

/// A group backend: prime order q plus the two generators G and H.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Backend(BackendKind);

/// The canonical transparent backend: `Z_7919`, G = 1, H = 5657.
pub const TRANSPARENT: Backend = Backend(BackendKind::Modular {
    order: 7919,
    g: 1,
    h: 5657,
});

/// The toy elliptic-curve backend (order 971).
pub const TOY_CURVE: Backend = Backend(BackendKind::ToyCurve);

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

impl Backend {
    /// A transparent (residue) backend with custom parameters, mostly useful
    /// for hand-checkable test instances such as q = 13.
    pub fn transparent(order: u64, g: u64, h: u64) -> Result<Backend, GroupError> {
        if !is_prime(order) {
            return Err(GroupError::BadParameters(format!(
                "order {order} is not prime"
            )));
        }
        if g == 0 || h == 0 || g >= order || h >= order {
            return Err(GroupError::BadParameters(
                "generators must be nonzero residues".into(),
            ));
        }
        if g == h {
            return Err(GroupError::BadParameters("G and H must differ".into()));
        }
        Ok(Backend(BackendKind::Modular { order, g, h }))
    }

    /// Prime group order q.
    pub fn order(&self) -> u64 {
        match self.0 {
            BackendKind::Modular { order, .. } => order,
            BackendKind::ToyCurve => curve::CURVE_ORDER,
        }
    }

    pub fn name(&self) -> String {
        match self.0 {
            BackendKind::Modular {
                order: 7919,
                g: 1,
                h: 5657,
            } => "transparent".into(),
            BackendKind::Modular { order, g, h } => format!("transparent(q={order},g={g},h={h})"),
            BackendKind::ToyCurve => "toycurve".into(),
        }
    }

    /// Signature/blinding generator G.
    pub fn generator(&self) -> GroupElement {
        match self.0 {
            BackendKind::Modular { g, .. } => GroupElement(Repr::Residue {
                backend: *self,
                value: g,
            }),
            BackendKind::ToyCurve => GroupElement(Repr::Point(CurvePoint::base())),
        }
    }

    /// Value generator H. On the curve backend H is hash-to-group derived,
    /// so its discrete log with respect to G is unknown.
    pub fn value_generator(&self) -> GroupElement {
        match self.0 {
            BackendKind::Modular { h, .. } => GroupElement(Repr::Residue {
                backend: *self,
                value: h,
            }),
            BackendKind::ToyCurve => {
                static TOY_H: OnceLock<GroupElement> = OnceLock::new();
                *TOY_H.get_or_init(|| {
                    TOY_CURVE
                        .hash_to_group(b"mw.generator.H")
                        .expect("tag is non-empty")
                })
            }
        }
    }

    pub fn identity(&self) -> GroupElement {
        match self.0 {
            BackendKind::Modular { .. } => GroupElement(Repr::Residue {
                backend: *self,
                value: 0,
            }),
            BackendKind::ToyCurve => GroupElement(Repr::Point(CurvePoint::Infinity)),
        }
    }

    /// Reduce an integer into the scalar field.
    pub fn scalar(&self, value: u64) -> Scalar {
        Scalar {
            backend: *self,
            value: value % self.order(),
        }
    }

    /// Hash a byte string onto the scalar field.
    pub fn scalar_from_hash(&self, parts: &[&[u8]]) -> Scalar {
        let mut hasher = Sha256::new();
        for part in parts {
            hasher.update((part.len() as u64).to_be_bytes());
            hasher.update(part);
        }
        let digest = hasher.finalize();
        let mut raw = [0u8; 8];
        raw.copy_from_slice(&digest[..8]);
        self.scalar(u64::from_be_bytes(raw))
    }

    /// Deterministically map a non-empty tag to a non-identity element.
    ///
    /// A retry counter is folded into the hash input, so the search never
    /// settles on the identity (transparent) or a non-residue x (curve).
    pub fn hash_to_group(&self, tag: &[u8]) -> Result<GroupElement, GroupError> {
        if tag.is_empty() {
            return Err(GroupError::EmptyTag);
        }
        for counter in 0u32.. {
            let mut hasher = Sha256::new();
            hasher.update(b"mw.hash-to-group.v1");
            hasher.update((tag.len() as u64).to_be_bytes());
            hasher.update(tag);
            hasher.update(counter.to_be_bytes());
            let digest = hasher.finalize();
            let mut raw = [0u8; 8];
            raw.copy_from_slice(&digest[..8]);
            let candidate = u64::from_be_bytes(raw);
            match self.0 {
                BackendKind::Modular { order, .. } => {
                    let value = candidate % order;
                    if value != 0 {
                        return Ok(GroupElement(Repr::Residue {
                            backend: *self,
                            value,
                        }));
                    }
                }
                BackendKind::ToyCurve => {
                    let x = candidate % curve::FIELD_PRIME;
                    let rhs = curve::rhs(x);
                    let y = curve::powm(rhs, (curve::FIELD_PRIME + 1) / 4);
                    if curve::on_curve(x, y) {
                        let y = y.min((curve::FIELD_PRIME - y) % curve::FIELD_PRIME);
                        return Ok(GroupElement(Repr::Point(CurvePoint::Affine { x, y })));
                    }
                }
            }
        }
        unreachable!("hash-to-group retry loop always terminates");
    }

    /// Width of a canonically serialized element, in bytes.
    pub fn element_byte_len(&self) -> usize {
        match self.0 {
            BackendKind::Modular { .. } => 8,
            BackendKind::ToyCurve => 17,
        }
    }

    pub fn scalar_from_bytes(&self, bytes: &[u8]) -> Result<Scalar, GroupError> {
        let raw: [u8; 8] = bytes.try_into().map_err(|_| GroupError::Decode {
            what: "scalar",
            detail: format!("expected 8 bytes, got {}", bytes.len()),
        })?;
        let value = u64::from_be_bytes(raw);
        if value >= self.order() {
            return Err(GroupError::Decode {
                what: "scalar",
                detail: format!("{value} is not reduced modulo {}", self.order()),
            });
        }
        Ok(Scalar {
            backend: *self,
            value,
        })
    }

    pub fn scalar_from_hex(&self, hex_str: &str) -> Result<Scalar, GroupError> {
        let bytes = hex::decode(hex_str).map_err(|e| GroupError::Decode {
            what: "scalar",
            detail: e.to_string(),
        })?;
        self.scalar_from_bytes(&bytes)
    }

    pub fn element_from_bytes(&self, bytes: &[u8]) -> Result<GroupElement, GroupError> {
        match self.0 {
            BackendKind::Modular { order, .. } => {
                let raw: [u8; 8] = bytes.try_into().map_err(|_| GroupError::Decode {
                    what: "group element",
                    detail: format!("expected 8 bytes, got {}", bytes.len()),
                })?;
                let value = u64::from_be_bytes(raw);
                if value >= order {
                    return Err(GroupError::Decode {
                        what: "group element",
                        detail: format!("{value} is not reduced modulo {order}"),
                    });
                }
                Ok(GroupElement(Repr::Residue {
                    backend: *self,
                    value,
                }))
            }
            BackendKind::ToyCurve => {
                if bytes.len() != 17 {
                    return Err(GroupError::Decode {
                        what: "group element",
                        detail: format!("expected 17 bytes, got {}", bytes.len()),
                    });
                }
                let flag = bytes[0];
                let x = u64::from_be_bytes(bytes[1..9].try_into().unwrap());
                let y = u64::from_be_bytes(bytes[9..17].try_into().unwrap());
                match flag {
                    0 => {
                        if !curve::on_curve(x, y) {
                            return Err(GroupError::Decode {
                                what: "group element",
                                detail: format!("({x},{y}) is not on the curve"),
                            });
                        }
                        Ok(GroupElement(Repr::Point(CurvePoint::Affine { x, y })))
                    }
                    1 => {
                        if x != 0 || y != 0 {
                            return Err(GroupError::Decode {
                                what: "group element",
                                detail: "infinity must encode zero coordinates".into(),
                            });
                        }
                        Ok(GroupElement(Repr::Point(CurvePoint::Infinity)))
                    }
                    other => Err(GroupError::Decode {
                        what: "group element",
                        detail: format!("bad infinity flag {other}"),
                    }),
                }
            }
        }
    }

    pub fn element_from_hex(&self, hex_str: &str) -> Result<GroupElement, GroupError> {
        let bytes = hex::decode(hex_str).map_err(|e| GroupError::Decode {
            what: "group element",
            detail: e.to_string(),
        })?;
        self.element_from_bytes(&bytes)
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

fn mismatch(a: Backend, b: Backend) -> GroupError {
    GroupError::BackendMismatch {
        left: a.name(),
        right: b.name(),
    }
}

/// An element of the scalar field `Z_q`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Scalar {
    backend: Backend,
    value: u64,
}

impl Scalar {
    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    fn check(self, rhs: Scalar) -> Result<(), GroupError> {
        if self.backend != rhs.backend {
            return Err(mismatch(self.backend, rhs.backend));
        }
        Ok(())
    }

    pub fn add(self, rhs: Scalar) -> Result<Scalar, GroupError> {
        self.check(rhs)?;
        let q = self.backend.order();
        Ok(Scalar {
            backend: self.backend,
            value: (self.value + rhs.value) % q,
        })
    }

    pub fn sub(self, rhs: Scalar) -> Result<Scalar, GroupError> {
        self.check(rhs)?;
        Ok(self.add(rhs.neg())?)
    }

    pub fn mul(self, rhs: Scalar) -> Result<Scalar, GroupError> {
        self.check(rhs)?;
        let q = self.backend.order() as u128;
        Ok(Scalar {
            backend: self.backend,
            value: ((self.value as u128 * rhs.value as u128) % q) as u64,
        })
    }

    pub fn neg(self) -> Scalar {
        let q = self.backend.order();
        Scalar {
            backend: self.backend,
            value: (q - self.value) % q,
        }
    }

    /// Multiplicative inverse; q is prime, so Fermat does the work.
    pub fn inverse(self) -> Result<Scalar, GroupError> {
        if self.value == 0 {
            return Err(GroupError::ZeroInverse);
        }
        let q = self.backend.order() as u128;
        let mut acc: u128 = 1;
        let mut base = self.value as u128;
        let mut exp = self.backend.order() - 2;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * base % q;
            }
            base = base * base % q;
            exp >>= 1;
        }
        Ok(Scalar {
            backend: self.backend,
            value: acc as u64,
        })
    }

    pub fn to_bytes(self) -> [u8; 8] {
        self.value.to_be_bytes()
    }

    pub fn to_hex(self) -> String {
        hex::encode(self.to_bytes())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
enum Repr {
    Residue { backend: Backend, value: u64 },
    Point(CurvePoint),
}

/// An element of the group, closed under `add` and `scalar_mul`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct GroupElement(Repr);

impl GroupElement {
    pub fn backend(&self) -> Backend {
        match self.0 {
            Repr::Residue { backend, .. } => backend,
            Repr::Point(_) => TOY_CURVE,
        }
    }

    pub fn is_identity(&self) -> bool {
        match self.0 {
            Repr::Residue { value, .. } => value == 0,
            Repr::Point(p) => p.is_infinity(),
        }
    }

    /// Discrete log on the transparent backend, where it is public by design.
    pub fn residue_value(&self) -> Option<u64> {
        match self.0 {
            Repr::Residue { value, .. } => Some(value),
            Repr::Point(_) => None,
        }
    }

    pub fn add(self, rhs: GroupElement) -> Result<GroupElement, GroupError> {
        match (self.0, rhs.0) {
            (
                Repr::Residue {
                    backend: ba,
                    value: a,
                },
                Repr::Residue {
                    backend: bb,
                    value: b,
                },
            ) => {
                if ba != bb {
                    return Err(mismatch(ba, bb));
                }
                Ok(GroupElement(Repr::Residue {
                    backend: ba,
                    value: (a + b) % ba.order(),
                }))
            }
            (Repr::Point(p), Repr::Point(q)) => Ok(GroupElement(Repr::Point(p.add(q)))),
            _ => Err(mismatch(self.backend(), rhs.backend())),
        }
    }

    pub fn sub(self, rhs: GroupElement) -> Result<GroupElement, GroupError> {
        self.add(rhs.neg())
    }

    pub fn neg(self) -> GroupElement {
        match self.0 {
            Repr::Residue { backend, value } => {
                let q = backend.order();
                GroupElement(Repr::Residue {
                    backend,
                    value: (q - value) % q,
                })
            }
            Repr::Point(p) => GroupElement(Repr::Point(p.neg())),
        }
    }

    pub fn scalar_mul(self, k: Scalar) -> Result<GroupElement, GroupError> {
        if k.backend() != self.backend() {
            return Err(mismatch(k.backend(), self.backend()));
        }
        match self.0 {
            Repr::Residue { backend, value } => {
                let q = backend.order() as u128;
                Ok(GroupElement(Repr::Residue {
                    backend,
                    value: ((value as u128 * k.value() as u128) % q) as u64,
                }))
            }
            Repr::Point(p) => Ok(GroupElement(Repr::Point(p.mul(k.value())))),
        }
    }

    /// Canonical serialization: big-endian fixed width on the transparent
    /// backend, `(flag, x, y)` on the curve backend.
    pub fn to_bytes(&self) -> Vec<u8> {
        match self.0 {
            Repr::Residue { value, .. } => value.to_be_bytes().to_vec(),
            Repr::Point(CurvePoint::Infinity) => {
                let mut out = vec![1u8];
                out.extend_from_slice(&[0u8; 16]);
                out
            }
            Repr::Point(CurvePoint::Affine { x, y }) => {
                let mut out = vec![0u8];
                out.extend_from_slice(&x.to_be_bytes());
                out.extend_from_slice(&y.to_be_bytes());
                out
            }
        }
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.to_bytes())
    }
}

impl PartialOrd for GroupElement {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for GroupElement {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.backend(), self.to_bytes()).cmp(&(other.backend(), other.to_bytes()))
    }
}

/// `k · P`, the free-function spelling of [`GroupElement::scalar_mul`].
pub fn scalar_mul(k: Scalar, point: GroupElement) -> Result<GroupElement, GroupError> {
    point.scalar_mul(k)
}

/// Sum a sequence of elements, starting from the backend's identity.
pub fn sum_elements<I>(backend: Backend, elems: I) -> Result<GroupElement, GroupError>
where
    I: IntoIterator<Item = GroupElement>,
{
    let mut acc = backend.identity();
    for e in elems {
        acc = acc.add(e)?;
    }
    Ok(acc)
}
