use alloc::vec::Vec;

/// One sample of the optimization state.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Record {
    pub time: f64,
    pub iter: u64,
    pub f: f64,
    pub grad_sq_norm: f64,
}

/// Who contributed to one update, as `(worker, point version)` pairs.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct UpdateInfo {
    pub time: f64,
    /// Iteration index `k` of the iterate the update was applied to.
    pub iter: u64,
    pub contributors: Vec<(usize, u64)>,
}

impl UpdateInfo {
    /// Largest `iter - version` among the contributors.
    pub fn staleness(&self) -> u64 {
        self.contributors.iter().map(|&(_, v)| self.iter - v).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Trajectory {
    /// Strictly increasing in time.
    pub records: Vec<Record>,
    pub gradients_produced: u64,
    pub gradients_used: u64,
    pub gradients_discarded: u64,
    /// Filled only when update logging is enabled.
    pub updates: Vec<UpdateInfo>,
}

impl Trajectory {
    pub fn last(&self) -> &Record {
        self.records
            .last()
            .expect("a trajectory always holds the initial record")
    }

    pub fn final_time(&self) -> f64 {
        self.last().time
    }

    pub fn iterations(&self) -> u64 {
        self.last().iter
    }
}

/// Collects records, keeping every iteration until `cap` records exist and
/// then doubling the stride (thinning the stored records) each time the cap
/// is hit again.
#[derive(Debug)]
pub(crate) struct Recorder {
    records: Vec<Record>,
    cap: usize,
    stride: u64,
    /// Last observed state, kept so that the final iterate is always stored.
    pending: Option<Record>,
}

impl Recorder {
    pub(crate) fn new(cap: usize) -> Self {
        Self {
            records: Vec::new(),
            cap: cap.max(2),
            stride: 1,
            pending: None,
        }
    }

    /// Whether the state after iteration `iter` at `time` must be evaluated
    /// now (otherwise only its cheap descriptor is remembered).
    pub(crate) fn wants(&self, time: f64, iter: u64) -> bool {
        iter.is_multiple_of(self.stride) || self.records.last().is_some_and(|r| r.time == time)
    }

    pub(crate) fn push(&mut self, rec: Record) {
        self.pending = None;
        if let Some(last) = self.records.last_mut() {
            if last.time == rec.time {
                *last = rec;
                return;
            }
        }
        self.records.push(rec);
        if self.records.len() >= self.cap {
            self.stride *= 2;
            let stride = self.stride;
            let last = self.records.len() - 1;
            let mut i = 0;
            self.records.retain(|r| {
                let keep = i == 0 || i == last || r.iter % stride == 0;
                i += 1;
                keep
            });
        }
    }

    /// Notes a state that was skipped by the stride.
    pub(crate) fn skip(&mut self, time: f64, iter: u64) {
        self.pending = Some(Record {
            time,
            iter,
            f: f64::NAN,
            grad_sq_norm: f64::NAN,
        });
    }

    /// The skipped state that still needs evaluating at the end, if any.
    pub(crate) fn pending(&self) -> Option<(f64, u64)> {
        self.pending.map(|r| (r.time, r.iter))
    }

    pub(crate) fn finish(self) -> Vec<Record> {
        self.records
    }
}
