#![allow(dead_code)]

use std::collections::HashMap;

use hevote_core::backend::TraceOp;
use hevote_core::BackendParams;

/// Independent scalar replay of the level policy: fresh vectors start at
/// `L - K`, multiplications consume one level, and an operand below
/// `1 + reserve` is bootstrapped (lower operand first) before multiplying.
pub struct LevelOracle {
    fresh: u32,
    need: u32,
    levels: HashMap<u64, u32>,
    pub bootstraps: u64,
    pub mismatches: Vec<String>,
}

impl LevelOracle {
    pub fn new(params: &BackendParams) -> Self {
        Self {
            fresh: params.max_level - params.bootstrap_cost,
            need: 1 + params.level_reserve,
            levels: HashMap::new(),
            bootstraps: 0,
            mismatches: Vec::new(),
        }
    }

    fn level(&self, id: u64) -> u32 {
        *self
            .levels
            .get(&id)
            .unwrap_or_else(|| panic!("operand {id} never produced"))
    }

    fn lift(&mut self, l: u32) -> u32 {
        if l < self.need {
            self.bootstraps += 1;
            self.fresh
        } else {
            l
        }
    }

    fn set(&mut self, op: &TraceOp, out: u64, predicted: u32, recorded: u32) {
        if predicted != recorded {
            self.mismatches.push(format!(
                "{op:?}: predicted level {predicted}, recorded {recorded}"
            ));
        }
        self.levels.insert(out, predicted);
    }

    pub fn replay(&mut self, trace: &[TraceOp]) {
        for op in trace {
            match *op {
                TraceOp::Encrypt { out, level } => self.set(op, out, self.fresh, level),
                TraceOp::Add { out, a, b, level } | TraceOp::Sub { out, a, b, level } => {
                    let l = self.level(a).min(self.level(b));
                    self.set(op, out, l, level)
                }
                TraceOp::Mul { out, a, b, level } => {
                    let l = if a == b {
                        let la = self.level(a);
                        self.lift(la)
                    } else {
                        let (mut la, mut lb) = (self.level(a), self.level(b));
                        while la.min(lb) < self.need {
                            if la <= lb {
                                la = self.lift(la);
                            } else {
                                lb = self.lift(lb);
                            }
                        }
                        la.min(lb)
                    };
                    self.set(op, out, l - 1, level)
                }
                TraceOp::MulPlain { out, a, level } => {
                    let la = self.level(a);
                    let l = self.lift(la);
                    self.set(op, out, l - 1, level)
                }
                TraceOp::AddPlain { out, a, level } | TraceOp::Rotate { out, a, level } => {
                    let l = self.level(a);
                    self.set(op, out, l, level)
                }
                TraceOp::Bootstrap { out, level, .. } => {
                    self.bootstraps += 1;
                    self.set(op, out, self.fresh, level)
                }
            }
        }
    }
}

/// Plaintext argmax with first-index tie-break.
pub fn plain_argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

pub fn one_hot(n: usize, k: usize) -> Vec<u8> {
    (0..n).map(|i| u8::from(i == k)).collect()
}
