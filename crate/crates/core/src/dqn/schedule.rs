//! Exploration rate with polynomial decay from `start` to `end`.

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub power: f64,
    pub horizon: usize,
}

impl EpsilonSchedule {
    /// `end + (start - end) * (1 - min(step, horizon) / horizon)^power`.
    pub fn value(&self, step: usize) -> f64 {
        if self.horizon == 0 {
            return self.end;
        }
        let frac = step.min(self.horizon) as f64 / self.horizon as f64;
        let v = self.end + (self.start - self.end) * (1.0 - frac).powf(self.power);
        v.clamp(self.end.min(self.start), self.start.max(self.end))
    }
}
