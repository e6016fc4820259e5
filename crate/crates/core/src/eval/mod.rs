//! Mel-cepstral distortion and listening-test statistics.

mod mcd;
mod mushra;
mod ranksum;

pub use mcd::{mcd, mcd_waveforms, waveform_to_melcepstra, McdEntry, McdReport, MCD_SCALE};
pub use mushra::{mushra_report, MushraReport, MushraScores, PairTest, Rating, SystemSummary};
pub use ranksum::{ranksum_exact, ranksum_normal, ranksum_test, RanksumResult, EXACT_BELOW};
