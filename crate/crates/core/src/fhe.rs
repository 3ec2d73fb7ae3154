//! A toy degree-1 somewhat-homomorphic scheme over `Z_q`.
//!
//! Secrets are vectors `s` in `Z_q^n`; a linear ciphertext is the
//! coefficient vector of an affine form `c(x) = c_0 + sum c_k x_k`. Public
//! keys are forms evaluating to small even values at `s`, so
//! `c(s) = m + 2e (mod q)` and the plaintext bit is the parity of the
//! centered representative while the noise `|m + 2e|` stays below `q/2`.
//!
//! Addition adds coefficient vectors. Multiplying two linear ciphertexts
//! gives a quadratic form in `s` (stored folded, coefficients for `i <= j`),
//! which decrypts the product bit but leaves degree 2. One key switch is
//! supported: bit-decompose the quadratic coefficients and absorb them into
//! precomputed linear hint ciphertexts under a fresh key, paying a small
//! additive noise per set bit.
//!
//! Everything here is exact integer arithmetic; intermediate products go
//! through `u128` so any odd modulus below `2^62` is safe.

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FheError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("plaintext must be 0 or 1, got {value}")]
    InvalidPlaintext { value: u64 },
    #[error("mismatched operands: {0}")]
    Mismatch(String),
}

/// Scheme parameters: modulus, secret length, per-sample noise bound, and
/// public-key size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FheParams {
    q: u64,
    n: usize,
    noise_bound: u64,
    pk_size: usize,
}

impl FheParams {
    /// Requires an odd modulus `3 <= q < 2^62` roomy enough that fresh
    /// ciphertexts decrypt: `2 * (2 * noise_bound * pk_size) < q`.
    pub fn new(q: u64, n: usize, noise_bound: u64, pk_size: usize) -> Result<Self, FheError> {
        if q < 3 || q % 2 == 0 || q >= (1 << 62) {
            return Err(FheError::InvalidParams(format!(
                "modulus must be odd, in [3, 2^62), got {q}"
            )));
        }
        if n == 0 {
            return Err(FheError::InvalidParams("secret length must be positive".into()));
        }
        if noise_bound == 0 || pk_size == 0 {
            return Err(FheError::InvalidParams(
                "noise_bound and pk_size must be positive".into(),
            ));
        }
        let worst_fresh = 2u128 * noise_bound as u128 * pk_size as u128;
        if 2 * worst_fresh >= q as u128 {
            return Err(FheError::InvalidParams(format!(
                "fresh noise bound {worst_fresh} is not below q/2 = {}",
                q / 2
            )));
        }
        Ok(Self {
            q,
            n,
            noise_bound,
            pk_size,
        })
    }

    pub fn default_params() -> Self {
        Self::new(2_147_483_647, 16, 4, 32).expect("defaults are valid")
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn noise_bound(&self) -> u64 {
        self.noise_bound
    }

    pub fn pk_size(&self) -> usize {
        self.pk_size
    }

    /// Bits needed to write values of `Z_q`: `ceil(log2 q)`.
    pub fn coeff_bits(&self) -> u32 {
        64 - (self.q - 1).leading_zeros()
    }

    /// Worst-case absolute noise of a fresh encryption.
    pub fn fresh_noise_bound(&self) -> u64 {
        2 * self.noise_bound * self.pk_size as u64 + 1
    }
}

#[derive(Debug, Clone)]
pub struct SecretKey {
    q: u64,
    s: Vec<u64>,
}

impl SecretKey {
    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }
}

/// Affine form `c_0 + sum c_k x_k` with coefficients in `Z_q`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearCiphertext {
    q: u64,
    coeffs: Vec<u64>,
}

impl LinearCiphertext {
    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn q(&self) -> u64 {
        self.q
    }
}

/// Quadratic form in `(1, x_1, ..., x_n)`, coefficients folded onto the
/// upper triangle `i <= j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadraticCiphertext {
    q: u64,
    n: usize,
    coeffs: Vec<u64>,
}

impl QuadraticCiphertext {
    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    /// Coefficient of `x_i x_j` for `i <= j` (slot 0 is the constant 1).
    pub fn coeff(&self, i: usize, j: usize) -> u64 {
        self.coeffs[pair_index(i, j, self.n)]
    }
}

/// Flat position of the pair `(i, j)`, `0 <= i <= j <= n`, in row-major
/// upper-triangle order.
fn pair_index(i: usize, j: usize, n: usize) -> usize {
    debug_assert!(i <= j && j <= n);
    i * (2 * (n + 1) - i + 1) / 2 + (j - i)
}

fn pair_count(n: usize) -> usize {
    (n + 1) * (n + 2) / 2
}

/// Public key: forms that evaluate to small even values at the secret.
#[derive(Debug, Clone)]
pub struct PublicKey {
    params: FheParams,
    elements: Vec<LinearCiphertext>,
}

impl PublicKey {
    pub fn params(&self) -> &FheParams {
        &self.params
    }

    pub fn elements(&self) -> &[LinearCiphertext] {
        &self.elements
    }
}

/// Everything one party needs: the encryption secret `s`, the switch target
/// secret `t`, the public key under `s`, and hints taking quadratic
/// ciphertexts under `s` to linear ones under `t`.
#[derive(Debug, Clone)]
pub struct KeyMaterial {
    pub secret: SecretKey,
    pub switch_secret: SecretKey,
    pub public: PublicKey,
    pub hints: KeySwitchHints,
}

/// Hints for one key switch: for every monomial `x_i x_j` and every bit
/// position `b`, a linear form under the target key evaluating to
/// `2^b * s_i s_j` plus small even noise.
#[derive(Debug, Clone)]
pub struct KeySwitchHints {
    q: u64,
    n: usize,
    bits: u32,
    hints: Vec<LinearCiphertext>,
}

impl KeySwitchHints {
    pub fn bits(&self) -> u32 {
        self.bits
    }

    fn hint(&self, pair: usize, bit: u32) -> &LinearCiphertext {
        &self.hints[pair * self.bits as usize + bit as usize]
    }
}

fn mod_add(a: u64, b: u64, q: u64) -> u64 {
    let s = a as u128 + b as u128;
    (s % q as u128) as u64
}

fn mod_sub(a: u64, b: u64, q: u64) -> u64 {
    (a as u128 + q as u128 - b as u128) as u64 % q
}

fn mod_mul(a: u64, b: u64, q: u64) -> u64 {
    (a as u128 * b as u128 % q as u128) as u64
}

/// Centered representative in `(-q/2, q/2]`.
fn centered(v: u64, q: u64) -> i64 {
    if v > q / 2 {
        v as i64 - q as i64
    } else {
        v as i64
    }
}

/// Evaluation of a linear ciphertext at the secret, in `[0, q)`.
fn eval_linear(sk: &SecretKey, c: &LinearCiphertext) -> u64 {
    let mut acc = c.coeffs[0];
    for (ci, si) in c.coeffs[1..].iter().zip(&sk.s) {
        acc = mod_add(acc, mod_mul(*ci, *si, sk.q), sk.q);
    }
    acc
}

/// Evaluation of a quadratic ciphertext at the secret, in `[0, q)`.
fn eval_quadratic(sk: &SecretKey, c: &QuadraticCiphertext) -> u64 {
    let q = sk.q;
    let mut acc = 0u64;
    for i in 0..=c.n {
        let si = if i == 0 { 1 } else { sk.s[i - 1] };
        for j in i..=c.n {
            let sj = if j == 0 { 1 } else { sk.s[j - 1] };
            let term = mod_mul(c.coeff(i, j), mod_mul(si, sj, q), q);
            acc = mod_add(acc, term, q);
        }
    }
    acc
}

/// A linear form evaluating to `target + 2e` at `s`, with `|e|` at most the
/// parameter noise bound and all non-constant coefficients uniform.
fn noisy_form<R: Rng + ?Sized>(
    params: &FheParams,
    s: &[u64],
    target: u64,
    rng: &mut R,
) -> LinearCiphertext {
    let q = params.q;
    let mut coeffs = vec![0u64; params.n + 1];
    let mut acc = 0u64;
    for k in 1..=params.n {
        let a = rng.random_range(0..q);
        coeffs[k] = a;
        acc = mod_add(acc, mod_mul(a, s[k - 1], q), q);
    }
    let b = params.noise_bound as i64;
    let e = rng.random_range(-b..=b);
    let value = (target as i128 + 2 * e as i128).rem_euclid(q as i128) as u64;
    coeffs[0] = mod_sub(value, acc, q);
    LinearCiphertext { q, coeffs }
}

fn sample_secret<R: Rng + ?Sized>(params: &FheParams, rng: &mut R) -> SecretKey {
    let s = (0..params.n).map(|_| rng.random_range(0..params.q)).collect();
    SecretKey { q: params.q, s }
}

/// Samples the secrets `s` and `t`, a public key of `pk_size` noisy
/// encryptions of zero under `s`, and switch hints from `s` to `t`.
pub fn keygen<R: Rng + ?Sized>(params: &FheParams, rng: &mut R) -> KeyMaterial {
    let secret = sample_secret(params, rng);
    let switch_secret = sample_secret(params, rng);
    let elements = (0..params.pk_size)
        .map(|_| noisy_form(params, &secret.s, 0, rng))
        .collect();
    let hints = make_switch_hints(params, &secret, &switch_secret, rng)
        .expect("freshly sampled keys match their own parameters");
    KeyMaterial {
        secret,
        switch_secret,
        public: PublicKey {
            params: *params,
            elements,
        },
        hints,
    }
}

/// Encrypts one bit as `m + (random signed subset sum of the public key)`.
pub fn encrypt<R: Rng + ?Sized>(
    pk: &PublicKey,
    m: u64,
    rng: &mut R,
) -> Result<LinearCiphertext, FheError> {
    if m > 1 {
        return Err(FheError::InvalidPlaintext { value: m });
    }
    let q = pk.params.q;
    let mut coeffs = vec![0u64; pk.params.n + 1];
    coeffs[0] = m;
    for elem in &pk.elements {
        // Include each element with probability 1/2, then flip a sign.
        match rng.random_range(0..4u8) {
            2 => {
                for (c, e) in coeffs.iter_mut().zip(&elem.coeffs) {
                    *c = mod_add(*c, *e, q);
                }
            }
            3 => {
                for (c, e) in coeffs.iter_mut().zip(&elem.coeffs) {
                    *c = mod_sub(*c, *e, q);
                }
            }
            _ => {}
        }
    }
    Ok(LinearCiphertext { q, coeffs })
}

fn check_linear_match(sk_q: u64, sk_len: usize, c: &LinearCiphertext) -> Result<(), FheError> {
    if c.q != sk_q || c.coeffs.len() != sk_len + 1 {
        return Err(FheError::Mismatch(format!(
            "ciphertext (q {}, len {}) does not fit key (q {sk_q}, n {sk_len})",
            c.q,
            c.coeffs.len()
        )));
    }
    Ok(())
}

/// Parity of the centered evaluation: the plaintext bit while the noise is
/// in bounds.
pub fn decrypt(sk: &SecretKey, c: &LinearCiphertext) -> Result<u64, FheError> {
    check_linear_match(sk.q, sk.s.len(), c)?;
    Ok(centered(eval_linear(sk, c), sk.q).rem_euclid(2) as u64)
}

/// Centered evaluation `c(s)` in `(-q/2, q/2]`; its magnitude is the noise
/// and its parity the plaintext.
pub fn noise_of(sk: &SecretKey, c: &LinearCiphertext) -> Result<i64, FheError> {
    check_linear_match(sk.q, sk.s.len(), c)?;
    Ok(centered(eval_linear(sk, c), sk.q))
}

pub fn add(a: &LinearCiphertext, b: &LinearCiphertext) -> Result<LinearCiphertext, FheError> {
    if a.q != b.q || a.coeffs.len() != b.coeffs.len() {
        return Err(FheError::Mismatch(
            "addition requires matching modulus and length".into(),
        ));
    }
    let coeffs = a
        .coeffs
        .iter()
        .zip(&b.coeffs)
        .map(|(x, y)| mod_add(*x, *y, a.q))
        .collect();
    Ok(LinearCiphertext { q: a.q, coeffs })
}

/// Tensor product of two linear ciphertexts: the quadratic form with
/// `C_ij = a_i b_j + a_j b_i` for `i < j` and `C_ii = a_i b_i`, so that
/// `C(s) = a(s) b(s)`.
pub fn mul(a: &LinearCiphertext, b: &LinearCiphertext) -> Result<QuadraticCiphertext, FheError> {
    if a.q != b.q || a.coeffs.len() != b.coeffs.len() {
        return Err(FheError::Mismatch(
            "multiplication requires matching modulus and length".into(),
        ));
    }
    let q = a.q;
    let n = a.coeffs.len() - 1;
    let mut coeffs = vec![0u64; pair_count(n)];
    for i in 0..=n {
        for j in i..=n {
            let mut v = mod_mul(a.coeffs[i], b.coeffs[j], q);
            if i != j {
                v = mod_add(v, mod_mul(a.coeffs[j], b.coeffs[i], q), q);
            }
            coeffs[pair_index(i, j, n)] = v;
        }
    }
    Ok(QuadraticCiphertext { q, n, coeffs })
}

/// Parity of the centered evaluation of a quadratic ciphertext.
pub fn decrypt_quadratic(sk: &SecretKey, c: &QuadraticCiphertext) -> Result<u64, FheError> {
    noise_of_quadratic(sk, c).map(|v| v.rem_euclid(2) as u64)
}

/// Centered evaluation of a quadratic ciphertext at the secret.
pub fn noise_of_quadratic(sk: &SecretKey, c: &QuadraticCiphertext) -> Result<i64, FheError> {
    if c.q != sk.q || c.n != sk.s.len() {
        return Err(FheError::Mismatch(format!(
            "quadratic ciphertext (q {}, n {}) does not fit key (q {}, n {})",
            c.q,
            c.n,
            sk.q,
            sk.s.len()
        )));
    }
    Ok(centered(eval_quadratic(sk, c), sk.q))
}

/// Binary planes of a quadratic ciphertext's coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadraticBits {
    q: u64,
    n: usize,
    bits: u32,
    /// `planes[b][pair]` is bit `b` of coefficient `pair`.
    planes: Vec<Vec<u8>>,
}

impl QuadraticBits {
    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn planes(&self) -> &[Vec<u8>] {
        &self.planes
    }

    /// Exact inverse of [`bit_decompose`]: `sum_b 2^b * plane_b`.
    pub fn recompose(&self) -> QuadraticCiphertext {
        let mut coeffs = vec![0u64; pair_count(self.n)];
        for (b, plane) in self.planes.iter().enumerate() {
            for (pair, bit) in plane.iter().enumerate() {
                if *bit == 1 {
                    coeffs[pair] = mod_add(coeffs[pair], pow2_mod(b as u32, self.q), self.q);
                }
            }
        }
        QuadraticCiphertext {
            q: self.q,
            n: self.n,
            coeffs,
        }
    }
}

fn pow2_mod(b: u32, q: u64) -> u64 {
    ((1u128 << b) % q as u128) as u64
}

/// Splits every folded coefficient into `ceil(log2 q)` bits. Coefficients
/// live in `[0, q)`, so the planes recompose exactly without reduction.
pub fn bit_decompose(c: &QuadraticCiphertext) -> QuadraticBits {
    let bits = 64 - (c.q - 1).leading_zeros();
    let planes = (0..bits)
        .map(|b| c.coeffs.iter().map(|v| ((v >> b) & 1) as u8).collect())
        .collect();
    QuadraticBits {
        q: c.q,
        n: c.n,
        bits,
        planes,
    }
}

/// Builds hints for switching quadratic ciphertexts under `from` to linear
/// ciphertexts under `to`: one noisy form per monomial and bit position,
/// targeting `2^b * s_i s_j`.
pub fn make_switch_hints<R: Rng + ?Sized>(
    params: &FheParams,
    from: &SecretKey,
    to: &SecretKey,
    rng: &mut R,
) -> Result<KeySwitchHints, FheError> {
    if from.q != params.q || to.q != params.q || from.s.len() != params.n || to.s.len() != params.n
    {
        return Err(FheError::Mismatch(
            "keys do not match the hint parameters".into(),
        ));
    }
    let q = params.q;
    let bits = params.coeff_bits();
    let n = params.n;
    let mut hints = Vec::with_capacity(pair_count(n) * bits as usize);
    for i in 0..=n {
        let si = if i == 0 { 1 } else { from.s[i - 1] };
        for j in i..=n {
            let sj = if j == 0 { 1 } else { from.s[j - 1] };
            let monomial = mod_mul(si, sj, q);
            for b in 0..bits {
                let target = mod_mul(pow2_mod(b, q), monomial, q);
                hints.push(noisy_form(params, &to.s, target, rng));
            }
        }
    }
    Ok(KeySwitchHints { q, n, bits, hints })
}

/// Turns a quadratic ciphertext into a linear one under the hint target key:
/// decompose coefficients into bits and sum the matching hints. Each set
/// bit adds at most `2 * noise_bound` noise.
pub fn switch_key(
    hints: &KeySwitchHints,
    c: &QuadraticCiphertext,
) -> Result<LinearCiphertext, FheError> {
    if c.q != hints.q || c.n != hints.n {
        return Err(FheError::Mismatch(format!(
            "quadratic ciphertext (q {}, n {}) does not fit hints (q {}, n {})",
            c.q, c.n, hints.q, hints.n
        )));
    }
    let decomposed = bit_decompose(c);
    if decomposed.bits != hints.bits {
        return Err(FheError::Mismatch(format!(
            "decomposition width {} does not match hints ({})",
            decomposed.bits, hints.bits
        )));
    }
    let mut coeffs = vec![0u64; hints.n + 1];
    for (b, plane) in decomposed.planes.iter().enumerate() {
        for (pair, bit) in plane.iter().enumerate() {
            if *bit == 1 {
                let h = hints.hint(pair, b as u32);
                for (acc, hc) in coeffs.iter_mut().zip(&h.coeffs) {
                    *acc = mod_add(*acc, *hc, hints.q);
                }
            }
        }
    }
    Ok(LinearCiphertext {
        q: hints.q,
        coeffs,
    })
}
