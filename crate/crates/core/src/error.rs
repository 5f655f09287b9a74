use thiserror::Error;

#[derive(Debug, Error)]
pub enum CnfError {
    #[error("variable index 0 is not a literal")]
    ZeroVariable,
    #[error("variable {0} is outside the declared range")]
    VariableOutOfRange(i64),
    #[error("variable {var} exceeds alphabet size {num_vars}")]
    VariableAboveAlphabet { var: u32, num_vars: usize },
    #[error("variable {0} occurs more than once in a clause")]
    RepeatedVariable(u32),
    #[error("clause width must be at least 2, got {0}")]
    WidthTooSmall(usize),
    #[error("clause {clause} has {found} literals, expected {expected}")]
    NonUniformWidth { clause: usize, expected: usize, found: usize },
    #[error("clause {0} duplicates an earlier clause")]
    DuplicateClause(usize),
    #[error("malformed DIMACS header: {0}")]
    MalformedHeader(String),
    #[error("line {line}: cannot parse token {token:?}")]
    BadToken { line: usize, token: String },
    #[error("header declares {declared} clauses, found {found}")]
    ClauseCountMismatch { declared: usize, found: usize },
    #[error("world covers {world} variables, formula needs {num_vars}")]
    WorldTooSmall { world: usize, num_vars: usize },
    #[error("model enumeration over {num_vars} variables exceeds the cap of {cap}")]
    ModelCapExceeded { num_vars: usize, cap: usize },
    #[error("k = {k} out of range for n = {n} (need 1 < k <= n)")]
    WidthOutOfRange { k: usize, n: usize },
    #[error("permutation sizes (clauses {clauses:?}, vars {vars:?}) do not match")]
    PermutationMismatch { clauses: (usize, usize), vars: (usize, usize) },
    #[error("permutation is not a bijection")]
    NotABijection,
}

#[derive(Debug, Error)]
pub enum MilpError {
    #[error("brute-force feasibility over {num_vars} variables exceeds the cap of {cap}")]
    CapExceeded { num_vars: usize, cap: usize },
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("batch members disagree on feature dimensions: {0:?} vs {1:?}")]
    MixedFeatureDims((usize, usize), (usize, usize)),
    #[error("RNI fraction {0} outside [0, 1]")]
    BadFraction(f64),
    #[error("graph JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("graph is inconsistent: {0}")]
    Inconsistent(String),
}

#[derive(Debug, Error)]
pub enum WlError {
    #[error("WL colouring needs base features (dims (1, 0)), graph has {0:?}")]
    NotBaseGraph((usize, usize)),
}

#[derive(Debug, Error)]
pub enum GenError {
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
    #[error("{m} clauses exceed the {bound} distinct {k}-clauses over {n} variables")]
    TooManyClauses { k: usize, n: usize, m: usize, bound: u128 },
    #[error("could not balance the dataset after {attempts} attempts (sat {sat}/{want}, unsat {unsat}/{want})")]
    Unbalanced { attempts: u64, sat: usize, unsat: usize, want: usize },
    #[error(transparent)]
    Cnf(#[from] CnfError),
    #[error("dataset I/O at {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("dataset file {path}: {reason}")]
    BadEntry { path: String, reason: String },
    #[error("manifest: {0}")]
    Manifest(#[from] serde_json::Error),
}
