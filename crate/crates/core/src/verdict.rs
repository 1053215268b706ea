//! Validation verdicts shared by the transaction, block and chain checkers.
//!
//! Invalidity is a value, not an error: validators always produce a verdict,
//! and the reason pinpoints the first clause that failed.

use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Valid,
    Invalid(Reason),
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, Verdict::Valid)
    }

    pub fn reason(&self) -> Option<&Reason> {
        match self {
            Verdict::Valid => None,
            Verdict::Invalid(r) => Some(r),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Reason {
    /// The same commitment is consumed more than once by one transaction or
    /// block.
    DuplicateInput,
    /// Output at this index has no verifying range proof.
    RangeProof(usize),
    /// Kernel at this index fails signature verification against its excess.
    KernelSignature(usize),
    /// The stored kernel excesses do not sum to the recomputed transaction
    /// excess.
    Unbalanced,
    /// The block equation `Σ outputs − Σ inputs = offset·G + Σ excesses`
    /// does not hold.
    BalanceEquation,
    /// A genesis block carries inputs, or a chain does not start with a
    /// genesis block.
    GenesisShape,
    /// A genesis block appears beyond position zero.
    MisplacedGenesis,
    /// An input is not an unspent output of the chain.
    UnknownInput,
    /// An input was already spent earlier in the chain.
    DoubleSpend,
    /// Structurally unusable data (mixed group backends and the like).
    Malformed,
    /// Chain-level wrapper: the block at `index` failed with `cause`.
    Block { index: usize, cause: Box<Reason> },
}

impl Reason {
    /// The underlying reason, unwrapping chain-level context.
    pub fn root(&self) -> &Reason {
        match self {
            Reason::Block { cause, .. } => cause.root(),
            other => other,
        }
    }
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reason::DuplicateInput => write!(f, "duplicate input commitment"),
            Reason::RangeProof(i) => write!(f, "range proof for output {i} does not verify"),
            Reason::KernelSignature(i) => write!(f, "kernel {i} signature does not verify"),
            Reason::Unbalanced => write!(f, "kernel excesses do not match the transaction excess"),
            Reason::BalanceEquation => write!(f, "block balance equation does not hold"),
            Reason::GenesisShape => write!(f, "malformed genesis block"),
            Reason::MisplacedGenesis => write!(f, "genesis block beyond position zero"),
            Reason::UnknownInput => write!(f, "input is not an unspent output"),
            Reason::DoubleSpend => write!(f, "input already spent"),
            Reason::Malformed => write!(f, "structurally malformed data"),
            Reason::Block { index, cause } => write!(f, "block {index}: {cause}"),
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Valid => write!(f, "valid"),
            Verdict::Invalid(r) => write!(f, "invalid: {r}"),
        }
    }
}
