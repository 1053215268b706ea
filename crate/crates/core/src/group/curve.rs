//! Short-Weierstrass toy curve `y^2 = x^3 + 2x + 2` over `F_1031`.
//!
//! The group of rational points has prime order 971, fixed by exhaustive
//! point counting (see the `order_matches_point_count` test). Every affine
//! point therefore generates the whole group.

/// Field prime (p ≡ 3 mod 4, so square roots are `r^((p+1)/4)`).
pub const FIELD_PRIME: u64 = 1031;
/// Curve coefficient a.
pub const COEFF_A: u64 = 2;
/// Curve coefficient b.
pub const COEFF_B: u64 = 2;
/// Group order, prime, established by brute-force point count.
pub const CURVE_ORDER: u64 = 971;
/// Base point: the affine point with the smallest x, then smallest y.
pub const BASE_X: u64 = 0;
pub const BASE_Y: u64 = 473;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum CurvePoint {
    Infinity,
    Affine { x: u64, y: u64 },
}

fn addm(a: u64, b: u64) -> u64 {
    (a + b) % FIELD_PRIME
}

fn subm(a: u64, b: u64) -> u64 {
    (a + FIELD_PRIME - b % FIELD_PRIME) % FIELD_PRIME
}

fn mulm(a: u64, b: u64) -> u64 {
    ((a as u128 * b as u128) % FIELD_PRIME as u128) as u64
}

pub fn powm(mut base: u64, mut exp: u64) -> u64 {
    let mut acc = 1u64;
    base %= FIELD_PRIME;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mulm(acc, base);
        }
        base = mulm(base, base);
        exp >>= 1;
    }
    acc
}

fn invm(a: u64) -> u64 {
    // Fermat; FIELD_PRIME is prime and a != 0 on all call paths.
    powm(a, FIELD_PRIME - 2)
}

/// Right-hand side of the curve equation.
pub fn rhs(x: u64) -> u64 {
    addm(addm(mulm(mulm(x, x), x), mulm(COEFF_A, x)), COEFF_B)
}

pub fn on_curve(x: u64, y: u64) -> bool {
    x < FIELD_PRIME && y < FIELD_PRIME && mulm(y, y) == rhs(x)
}

impl CurvePoint {
    pub fn base() -> CurvePoint {
        CurvePoint::Affine {
            x: BASE_X,
            y: BASE_Y,
        }
    }

    pub fn is_infinity(&self) -> bool {
        matches!(self, CurvePoint::Infinity)
    }

    pub fn neg(self) -> CurvePoint {
        match self {
            CurvePoint::Infinity => CurvePoint::Infinity,
            CurvePoint::Affine { x, y } => CurvePoint::Affine {
                x,
                y: (FIELD_PRIME - y) % FIELD_PRIME,
            },
        }
    }

    pub fn add(self, other: CurvePoint) -> CurvePoint {
        let (x1, y1, x2, y2) = match (self, other) {
            (CurvePoint::Infinity, q) => return q,
            (p, CurvePoint::Infinity) => return p,
            (CurvePoint::Affine { x: x1, y: y1 }, CurvePoint::Affine { x: x2, y: y2 }) => {
                (x1, y1, x2, y2)
            }
        };
        if x1 == x2 && addm(y1, y2) == 0 {
            return CurvePoint::Infinity;
        }
        let lambda = if x1 == x2 && y1 == y2 {
            mulm(addm(mulm(3, mulm(x1, x1)), COEFF_A), invm(mulm(2, y1)))
        } else {
            mulm(subm(y2, y1), invm(subm(x2, x1)))
        };
        let x3 = subm(mulm(lambda, lambda), addm(x1, x2));
        let y3 = subm(mulm(lambda, subm(x1, x3)), y1);
        CurvePoint::Affine { x: x3, y: y3 }
    }

    pub fn mul(self, k: u64) -> CurvePoint {
        let mut acc = CurvePoint::Infinity;
        let mut base = self;
        let mut k = k % CURVE_ORDER;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.add(base);
            }
            base = base.add(base);
            k >>= 1;
        }
        acc
    }
}
