//! Feed-forward convolutional codes and a soft-input Viterbi decoder.
//!
//! Generators are written in octal with the most significant bit tapping the
//! current input, so `{15, 17}` with constraint length 4 is the usual
//! 8-state rate-1/2 code.

use crate::error::{Error, Result};

/// Largest supported constraint length (2^15 trellis states).
pub const MAX_CONSTRAINT_LENGTH: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConvCodeSpec {
    generators: Vec<u32>,
    constraint_length: usize,
}

impl ConvCodeSpec {
    pub fn new(generators: Vec<u32>, constraint_length: usize) -> Result<Self> {
        if !(1..=MAX_CONSTRAINT_LENGTH).contains(&constraint_length) {
            return Err(Error::InvalidArgument(format!(
                "constraint length must be in 1..={MAX_CONSTRAINT_LENGTH}, got {constraint_length}"
            )));
        }
        if generators.is_empty() {
            return Err(Error::InvalidArgument(
                "code needs at least one generator".into(),
            ));
        }
        for &g in &generators {
            if g == 0 || g >> constraint_length != 0 {
                return Err(Error::InvalidArgument(format!(
                    "generator {g:o} (octal) must be nonzero and fit in {constraint_length} bits"
                )));
            }
        }
        Ok(Self {
            generators,
            constraint_length,
        })
    }

    /// The rate-1/2, constraint-length-4 code with generators 15 and 17 (octal).
    pub fn standard_15_17() -> Self {
        Self {
            generators: vec![0o15, 0o17],
            constraint_length: 4,
        }
    }

    /// Parses a comma-separated list of octal generators, e.g. `"15,17"`.
    pub fn from_octal(list: &str, constraint_length: usize) -> Result<Self> {
        let generators = list
            .split(',')
            .map(|t| {
                u32::from_str_radix(t.trim(), 8)
                    .map_err(|_| Error::InvalidArgument(format!("`{t}` is not an octal generator")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(generators, constraint_length)
    }

    pub fn generators(&self) -> &[u32] {
        &self.generators
    }

    pub fn constraint_length(&self) -> usize {
        self.constraint_length
    }

    /// Output bits per input bit; the rate is its reciprocal.
    pub fn outputs(&self) -> usize {
        self.generators.len()
    }

    pub fn rate(&self) -> f64 {
        1.0 / self.outputs() as f64
    }

    pub fn states(&self) -> usize {
        1 << (self.constraint_length - 1)
    }

    pub fn tail_len(&self) -> usize {
        self.constraint_length - 1
    }

    /// Number of code bits produced for `info_len` information bits.
    pub fn codeword_len(&self, info_len: usize, terminated: bool) -> usize {
        (info_len + if terminated { self.tail_len() } else { 0 }) * self.outputs()
    }

    fn register(&self, state: usize, input: u8) -> u32 {
        ((input as u32) << (self.constraint_length - 1)) | state as u32
    }

    fn emit(&self, register: u32, out: &mut Vec<u8>) {
        out.extend(
            self.generators
                .iter()
                .map(|g| ((g & register).count_ones() & 1) as u8),
        );
    }
}

/// Encodes `bits`; a terminated codeword appends `K - 1` zero tail inputs.
pub fn conv_encode(bits: &[u8], spec: &ConvCodeSpec, terminated: bool) -> Vec<u8> {
    let mut out = Vec::with_capacity(spec.codeword_len(bits.len(), terminated));
    let tail = if terminated { spec.tail_len() } else { 0 };
    let mut state = 0usize;
    for u in bits
        .iter()
        .map(|b| b & 1)
        .chain(std::iter::repeat_n(0, tail))
    {
        let r = spec.register(state, u);
        spec.emit(r, &mut out);
        state = (r >> 1) as usize;
    }
    out
}

/// Decoded information bits and the path metric `Σ l_n c_n` of the chosen
/// codeword (tail included).
#[derive(Debug, Clone, PartialEq)]
pub struct TrellisPath {
    pub bits: Vec<u8>,
    pub metric: f64,
}

/// Soft-input Viterbi decoder maximizing `Σ l_n c_n` with `c_n ∈ {0, 1}`.
///
/// Holds its scratch buffers, so one instance should be reused across blocks
/// by a single thread. Among equal path metrics the lower-indexed
/// predecessor survives.
#[derive(Debug, Clone)]
pub struct ViterbiDecoder {
    spec: ConvCodeSpec,
    terminated: bool,
    /// Code bits on the branch leaving `state` with input `u`, at `2*state + u`.
    branch_bits: Vec<Vec<u8>>,
    metrics: Vec<f64>,
    next: Vec<f64>,
    decisions: Vec<u8>,
}

impl ViterbiDecoder {
    pub fn new(spec: ConvCodeSpec, terminated: bool) -> Self {
        let mut branch_bits = Vec::with_capacity(2 * spec.states());
        for state in 0..spec.states() {
            for u in 0..2u8 {
                let mut out = Vec::with_capacity(spec.outputs());
                spec.emit(spec.register(state, u), &mut out);
                branch_bits.push(out);
            }
        }
        Self {
            spec,
            terminated,
            branch_bits,
            metrics: Vec::new(),
            next: Vec::new(),
            decisions: Vec::new(),
        }
    }

    pub fn spec(&self) -> &ConvCodeSpec {
        &self.spec
    }

    pub fn decode(&mut self, llrs: &[f64]) -> Result<TrellisPath> {
        let n = self.spec.outputs();
        let tail = if self.terminated {
            self.spec.tail_len()
        } else {
            0
        };
        let steps = llrs.len() / n;
        if !llrs.len().is_multiple_of(n) || steps < tail {
            let expected = (steps.max(tail)) * n;
            return Err(Error::LengthMismatch {
                expected,
                got: llrs.len(),
            });
        }
        let states = self.spec.states();
        let top = self.spec.constraint_length - 1;

        self.metrics.clear();
        self.metrics.resize(states, f64::NEG_INFINITY);
        self.metrics[0] = 0.0;
        self.next.resize(states, 0.0);
        self.decisions.clear();
        self.decisions.resize(steps * states, 0);

        for t in 0..steps {
            let l = &llrs[t * n..(t + 1) * n];
            for ns in 0..states {
                let u = if top == 0 { 0 } else { ns >> (top - 1) };
                let base = (ns << 1) & (states - 1);
                let mut best = f64::NEG_INFINITY;
                let mut choice = 0u8;
                for b in 0..2usize {
                    let prev = base | b;
                    if top == 0 && b == 1 {
                        break;
                    }
                    let bits = &self.branch_bits[2 * prev + u];
                    let gain: f64 = l
                        .iter()
                        .zip(bits)
                        .filter(|(_, &c)| c == 1)
                        .map(|(x, _)| x)
                        .sum();
                    let m = self.metrics[prev] + gain;
                    if m > best {
                        best = m;
                        choice = b as u8;
                    }
                }
                self.next[ns] = best;
                self.decisions[t * states + ns] = choice;
            }
            std::mem::swap(&mut self.metrics, &mut self.next);
        }

        let end = if self.terminated {
            0
        } else {
            let mut e = 0;
            for s in 1..states {
                if self.metrics[s] > self.metrics[e] {
                    e = s;
                }
            }
            e
        };
        let metric = self.metrics[end];
        let mut inputs = vec![0u8; steps];
        let mut state = end;
        for t in (0..steps).rev() {
            inputs[t] = if top == 0 {
                0
            } else {
                (state >> (top - 1)) as u8
            };
            let b = self.decisions[t * states + state] as usize;
            state = ((state << 1) & (states - 1)) | b;
        }
        inputs.truncate(steps - tail);
        Ok(TrellisPath {
            bits: inputs,
            metric,
        })
    }
}

/// One-shot decoding of a terminated codeword.
pub fn viterbi_soft(llrs: &[f64], spec: &ConvCodeSpec) -> Result<TrellisPath> {
    ViterbiDecoder::new(spec.clone(), true).decode(llrs)
}
