use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::BoundsError;

/// Doubly infinite positive weights `{d_k, k ≠ 0}`: an explicit head for
/// `0 < |k| <= K0`, continued geometrically on each side.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSequence {
    head: BTreeMap<i64, f64>,
    pos_ratio: f64,
    neg_ratio: f64,
    k0: i64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightDoc {
    head: BTreeMap<String, f64>,
    pos_ratio: f64,
    neg_ratio: f64,
}

impl WeightSequence {
    pub fn new(head: BTreeMap<i64, f64>, pos_ratio: f64, neg_ratio: f64) -> Result<Self, BoundsError> {
        let invalid = |msg: String| Err(BoundsError::InvalidWeights(msg));
        if head.contains_key(&0) {
            return invalid("d_0 is not part of the sequence".into());
        }
        let k0 = head.keys().map(|k| k.abs()).max().unwrap_or(0);
        if k0 == 0 {
            return invalid("head must contain d_1 and d_-1".into());
        }
        for k in 1..=k0 {
            if !head.contains_key(&k) || !head.contains_key(&-k) {
                return invalid(format!("head is missing d_{k} or d_-{k}"));
            }
        }
        if let Some((k, v)) = head.iter().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
            return invalid(format!("d_{k} = {v} is not positive"));
        }
        for (side, r) in [("pos_ratio", pos_ratio), ("neg_ratio", neg_ratio)] {
            if !(r.is_finite() && r > 0.0) {
                return invalid(format!("{side} = {r} is not positive"));
            }
            if r < 1.0 {
                return invalid(format!("{side} = {r} < 1 drives the infimum of d_k to 0"));
            }
        }
        let inf = head.values().copied().fold(f64::INFINITY, f64::min);
        if (inf - 1.0).abs() > 1e-12 {
            return invalid(format!("inf d_k = {inf}, expected 1"));
        }
        Ok(WeightSequence {
            head,
            pos_ratio,
            neg_ratio,
            k0,
        })
    }

    /// `d_{±1} = 1`, `d_{±k} = ratio^{k-1}`.
    pub fn mirror_geometric(ratio: f64) -> Result<Self, BoundsError> {
        Self::new(BTreeMap::from([(-1, 1.0), (1, 1.0)]), ratio, ratio)
    }

    /// `d_1 = 1`, `d_{-1} = scale`, `d_k = ratio^{k-1}`, `d_{-k} = scale·ratio^{k-1}`.
    pub fn scaled_geometric(scale: f64, ratio: f64) -> Result<Self, BoundsError> {
        Self::new(BTreeMap::from([(-1, scale), (1, 1.0)]), ratio, ratio)
    }

    pub fn from_json(doc: &str) -> Result<Self, BoundsError> {
        let raw: WeightDoc = serde_json::from_str(doc)?;
        let mut head = BTreeMap::new();
        for (k, v) in raw.head {
            let k = k
                .trim()
                .parse::<i64>()
                .map_err(|_| BoundsError::InvalidWeights(format!("head key {k:?} is not an integer")))?;
            head.insert(k, v);
        }
        Self::new(head, raw.pos_ratio, raw.neg_ratio)
    }

    pub fn to_json(&self) -> String {
        let doc = WeightDoc {
            head: self.head.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            pos_ratio: self.pos_ratio,
            neg_ratio: self.neg_ratio,
        };
        serde_json::to_string_pretty(&doc).expect("weights serialize")
    }

    pub fn head_len(&self) -> i64 {
        self.k0
    }

    pub fn pos_ratio(&self) -> f64 {
        self.pos_ratio
    }

    pub fn neg_ratio(&self) -> f64 {
        self.neg_ratio
    }

    fn side(&self, k: i64) -> (f64, f64) {
        if k > 0 {
            (self.head[&self.k0], self.pos_ratio)
        } else {
            (self.head[&-self.k0], self.neg_ratio)
        }
    }

    /// `d_k` for `k ≠ 0`. Overflows to `inf` far out; use [`Self::ln_d`] there.
    pub fn d(&self, k: i64) -> f64 {
        assert!(k != 0, "d_0 is undefined");
        if k.abs() <= self.k0 {
            return self.head[&k];
        }
        let (edge, r) = self.side(k);
        edge * r.powf((k.abs() - self.k0) as f64)
    }

    pub fn ln_d(&self, k: i64) -> f64 {
        assert!(k != 0, "d_0 is undefined");
        if k.abs() <= self.k0 {
            return self.head[&k].ln();
        }
        let (edge, r) = self.side(k);
        edge.ln() + (k.abs() - self.k0) as f64 * r.ln()
    }

    /// `d_num / d_den`; exactly the tail ratio (or its inverse) for adjacent
    /// indices inside a geometric tail.
    pub fn ratio(&self, num: i64, den: i64) -> f64 {
        let same_side = num.signum() == den.signum();
        if same_side && num.abs().min(den.abs()) >= self.k0 && (num - den).abs() == 1 {
            let r = if num > 0 { self.pos_ratio } else { self.neg_ratio };
            return if num.abs() > den.abs() { r } else { 1.0 / r };
        }
        (self.ln_d(num) - self.ln_d(den)).exp()
    }

    /// `Σ_{j=min(1,k)}^{max(-1,k)} d_j`: the weight a unit of mass at `k`
    /// carries in the `‖D z‖` norm. Zero at `k = 0`.
    pub fn cumulative(&self, k: i64) -> f64 {
        if k == 0 {
            return 0.0;
        }
        let sign = k.signum();
        let head_sum = neumaier_sum((1..=k.abs().min(self.k0)).map(|j| self.head[&(sign * j)]));
        let m = k.abs() - self.k0;
        if m <= 0 {
            return head_sum;
        }
        let (edge, r) = self.side(k);
        let tail = if r == 1.0 {
            edge * m as f64
        } else {
            edge * r * (r.powf(m as f64) - 1.0) / (r - 1.0)
        };
        if tail.is_finite() {
            head_sum + tail
        } else {
            self.ln_cumulative(k).exp()
        }
    }

    /// `ln Σ_{j=min(1,k)}^{max(-1,k)} d_j`, accurate for any `|k|` up to
    /// where `ln` itself stops being finite.
    pub fn ln_cumulative(&self, k: i64) -> f64 {
        assert!(k != 0, "empty partial sum");
        let sign = k.signum();
        let head_terms = k.abs().min(self.k0);
        let head_sum = neumaier_sum((1..=head_terms).map(|j| self.head[&(sign * j)]));
        let m = k.abs() - self.k0;
        if m <= 0 {
            return head_sum.ln();
        }
        let (edge, r) = self.side(k);
        // d_K0·(r + r² + … + r^m)
        let ln_tail = edge.ln() + ln_geometric_sum(r, m);
        ln_add_exp(head_sum.ln(), ln_tail)
    }
}

/// `ln(r + r² + … + r^m)` for `r >= 1`, `m >= 1`.
fn ln_geometric_sum(r: f64, m: i64) -> f64 {
    let m_f = m as f64;
    if r == 1.0 {
        return m_f.ln();
    }
    let ln_r = r.ln();
    // r·(r^m - 1)/(r - 1), with r^m - 1 = r^m·(1 - r^-m)
    ln_r + m_f * ln_r + (-(-m_f * ln_r).exp()).ln_1p() - (r - 1.0).ln()
}

fn ln_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

pub(crate) fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
