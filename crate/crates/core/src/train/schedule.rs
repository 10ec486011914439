//! Reduce-on-plateau learning rate schedule.

/// Halve (by `decay`) the learning rate when the best loss has not improved
/// by more than `threshold` (relative) for `patience` consecutive epochs.
#[derive(Debug, Clone)]
pub struct PlateauSchedule {
    lr: f64,
    decay: f64,
    patience: usize,
    threshold: f64,
    best: f64,
    since_best: usize,
}

impl PlateauSchedule {
    pub fn new(initial_lr: f64, patience: usize, decay: f64, threshold: f64) -> Self {
        Self {
            lr: initial_lr,
            decay,
            patience,
            threshold,
            best: f64::INFINITY,
            since_best: 0,
        }
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    /// Feed one epoch loss; returns the learning rate for the next epoch.
    pub fn observe(&mut self, loss: f64) -> f64 {
        if loss < self.best * (1.0 - self.threshold) {
            self.best = loss;
            self.since_best = 0;
        } else {
            self.since_best += 1;
            if self.since_best >= self.patience {
                self.lr *= self.decay;
                self.since_best = 0;
            }
        }
        self.lr
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monotone_improvement_keeps_lr() {
        let mut s = PlateauSchedule::new(1.0, 3, 0.5, 1e-4);
        for i in 0..20 {
            s.observe(1.0 / (i + 1) as f64);
        }
        assert_eq!(s.lr(), 1.0);
    }

    #[test]
    fn flat_loss_halves_once_after_patience() {
        let mut s = PlateauSchedule::new(1.0, 3, 0.5, 1e-4);
        s.observe(0.5); // becomes best
        s.observe(0.5);
        s.observe(0.5);
        assert_eq!(s.lr(), 1.0);
        s.observe(0.5); // patience reached
        assert_eq!(s.lr(), 0.5);
        s.observe(0.5);
        s.observe(0.5);
        assert_eq!(s.lr(), 0.5);
    }

    #[test]
    fn two_plateaus_quarter_the_lr() {
        // scripted history oracle: improve, plateau, improve, plateau
        let mut s = PlateauSchedule::new(0.8, 2, 0.5, 1e-4);
        let history = [1.0, 1.0, 1.0, 0.5, 0.5, 0.5];
        for l in history {
            s.observe(l);
        }
        assert_eq!(s.lr(), 0.2);
    }

    #[test]
    fn sub_threshold_improvement_counts_as_plateau() {
        let mut s = PlateauSchedule::new(1.0, 2, 0.5, 1e-4);
        s.observe(1.0);
        s.observe(1.0 - 1e-6); // below the relative threshold
        s.observe(1.0 - 2e-6);
        assert_eq!(s.lr(), 0.5);
    }
}
