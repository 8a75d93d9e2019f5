//! Independent reference computations shared by the integration tests.
//! Nothing here calls into the crate's bound or solver code.

#![allow(dead_code)]

use num_bigint::BigInt;
use num_traits::Zero;

/// Modified Bessel function `I_n(x)` by its power series, summed in the
/// log domain term by term.
pub fn bessel_i(n: u32, x: f64) -> f64 {
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let half = (x / 2.0).ln();
    let ln_fact = |m: u32| (1..=m).map(|j| (j as f64).ln()).sum::<f64>();
    let mut sum = 0.0;
    let mut m = 0u32;
    loop {
        let ln_term = (2 * m + n) as f64 * half - ln_fact(m) - ln_fact(m + n);
        let term = ln_term.exp();
        sum += term;
        if m as f64 > x && term <= 1e-20 * sum {
            return sum;
        }
        m += 1;
    }
}

/// `P{N_λ − N_μ = k}` for independent Poisson counts with means `λt`, `μt`.
pub fn skellam_pmf(k: i64, lambda: f64, mu: f64, t: f64) -> f64 {
    let a = lambda * t;
    let b = mu * t;
    let order = k.unsigned_abs() as u32;
    (-(a + b)).exp() * (a / b).powf(k as f64 / 2.0) * bessel_i(order, 2.0 * (a * b).sqrt())
}

/// Fixed-point decimal with 70 fractional digits.
#[derive(Clone, Debug)]
pub struct Fixed(BigInt);

const DIGITS: u32 = 70;

fn scale() -> BigInt {
    BigInt::from(10u32).pow(DIGITS)
}

impl Fixed {
    pub fn ratio(num: i64, den: i64) -> Fixed {
        Fixed(scale() * BigInt::from(num) / BigInt::from(den))
    }

    pub fn int(v: i64) -> Fixed {
        Fixed::ratio(v, 1)
    }

    pub fn add(&self, o: &Fixed) -> Fixed {
        Fixed(&self.0 + &o.0)
    }

    pub fn mul(&self, o: &Fixed) -> Fixed {
        Fixed(&self.0 * &o.0 / scale())
    }

    pub fn div(&self, o: &Fixed) -> Fixed {
        assert!(!o.0.is_zero());
        Fixed(&self.0 * scale() / &o.0)
    }

    /// Floor of the square root, exact to the last digit.
    pub fn sqrt(&self) -> Fixed {
        Fixed((&self.0 * scale()).sqrt())
    }

    pub fn pow(&self, e: u32) -> Fixed {
        let mut acc = Fixed::int(1);
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn to_f64(&self) -> f64 {
        format!("{}e-{DIGITS}", self.0).parse().expect("decimal")
    }
}

/// A two-sided geometric weight sequence: `d_1 = 1`, `d_-1 = c`,
/// `d_k = r^(k-1)`, `d_-k = c·r^(k-1)`, with `r` given exactly.
pub struct ExactWeights {
    pub c: Fixed,
    /// `powers[j] = r^j`.
    powers: Vec<Fixed>,
}

impl ExactWeights {
    pub fn rational(c: i64, num: i64, den: i64, max_k: usize) -> Self {
        let r = Fixed::ratio(num, den);
        let mut powers = vec![Fixed::int(1)];
        for _ in 1..max_k {
            let next = powers.last().unwrap().mul(&r);
            powers.push(next);
        }
        ExactWeights {
            c: Fixed::int(c),
            powers,
        }
    }

    /// Ratio `√2`, with even powers exact and odd ones `2^m·√2`.
    pub fn sqrt_two(c: i64, max_k: usize) -> Self {
        let root = Fixed::int(2).sqrt();
        let powers = (0..max_k)
            .map(|j| {
                let even = Fixed::int(2).pow((j / 2) as u32);
                if j % 2 == 0 {
                    even
                } else {
                    even.mul(&root)
                }
            })
            .collect();
        ExactWeights {
            c: Fixed::int(c),
            powers,
        }
    }

    pub fn d(&self, k: i64) -> Fixed {
        assert!(k != 0);
        let p = self.powers[(k.unsigned_abs() - 1) as usize].clone();
        if k > 0 {
            p
        } else {
            p.mul(&self.c)
        }
    }

    /// `Σ_{j=1}^{k} d_j` or `Σ_{j=k}^{-1} d_j`, term by term.
    pub fn partial_sum(&self, k: i64) -> Fixed {
        let range: Vec<i64> = if k > 0 { (1..=k).collect() } else { (k..=-1).collect() };
        range.iter().fold(Fixed::int(0), |acc, j| acc.add(&self.d(*j)))
    }
}

/// Rational rate bound `num/den`.
pub type Q = (i64, i64);

pub struct TruncationInputs<'a> {
    pub w: &'a ExactWeights,
    pub w_star: &'a ExactWeights,
    pub m: Q,
    pub beta: Q,
    pub m_star: Q,
    pub beta_star: Q,
    pub mu0: Q,
    pub lambda0: Q,
    pub mu_n1: Q,
    pub lambda_n2: Q,
    pub n1: i64,
    pub n2: i64,
}

/// The truncation bound
/// `4MM*(μ̄0 d*_-1 + λ̄0 d*_1)/(d β* β) · (S_d(N1−1) μ̄_N1 / S_d*(N1) + S_d(N2+1) λ̄_N2 / S_d*(N2))`
/// with `d = min(d_-1, d_1)`, evaluated to 70 digits.
pub fn truncation_oracle(x: &TruncationInputs) -> f64 {
    let q = |v: Q| Fixed::ratio(v.0, v.1);
    let d1 = x.w.d(1);
    let dm1 = x.w.d(-1);
    let d_min = if d1.0 <= dm1.0 { d1 } else { dm1 };
    let source = q(x.mu0).mul(&x.w_star.d(-1)).add(&q(x.lambda0).mul(&x.w_star.d(1)));
    let pre = Fixed::int(4)
        .mul(&q(x.m))
        .mul(&q(x.m_star))
        .mul(&source)
        .div(&d_min.mul(&q(x.beta_star)).mul(&q(x.beta)));
    let left =
        x.w.partial_sum(x.n1 - 1)
            .mul(&q(x.mu_n1))
            .div(&x.w_star.partial_sum(x.n1));
    let right =
        x.w.partial_sum(x.n2 + 1)
            .mul(&q(x.lambda_n2))
            .div(&x.w_star.partial_sum(x.n2));
    pre.mul(&left.add(&right)).to_f64()
}

/// Reference constants for the random-walk example at `N = 150`.
pub fn random_walk_inputs<'a>(w: &'a ExactWeights, w_star: &'a ExactWeights) -> TruncationInputs<'a> {
    TruncationInputs {
        w,
        w_star,
        m: (1, 1),
        beta: (13, 28),
        m_star: (1, 1),
        beta_star: (1, 3),
        // rates at and beyond the origin in the outward direction are 1 + sin
        mu0: (2, 1),
        lambda0: (2, 1),
        mu_n1: (2, 1),
        lambda_n2: (2, 1),
        n1: -150,
        n2: 150,
    }
}

/// Reference constants for the taxi example at `N = 150`.
pub fn taxi_inputs<'a>(w: &'a ExactWeights, w_star: &'a ExactWeights) -> TruncationInputs<'a> {
    TruncationInputs {
        w,
        w_star,
        m: (1, 1),
        beta: (3, 32),
        m_star: (1, 1),
        beta_star: (3, 32),
        // idle taxis 1 + sin/8, passengers 2 + sin/4
        mu0: (9, 8),
        lambda0: (9, 4),
        mu_n1: (9, 8),
        lambda_n2: (9, 4),
        n1: -150,
        n2: 150,
    }
}

/// Limiting two-sided tail bound `M·(d_-1 μ̄0 + d_1 λ̄0)/β · (1/S(−N) + 1/S(N))`
/// for a start at the origin, with the partial sums added term by term.
pub fn limiting_tail_direct(m: f64, beta: f64, d: impl Fn(i64) -> f64, mu0: f64, lambda0: f64, n: i64) -> f64 {
    let left: f64 = (-n..=-1).map(&d).sum();
    let right: f64 = (1..=n).map(&d).sum();
    m * (d(-1) * mu0 + d(1) * lambda0) / beta * (1.0 / left + 1.0 / right)
}
