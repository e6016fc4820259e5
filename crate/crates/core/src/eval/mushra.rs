//! Listening-test ratings and pairwise significance tests between systems.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

use super::ranksum::{ranksum_test, RanksumResult};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rating {
    pub listener: String,
    pub system: String,
    pub sentence: String,
    pub score: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MushraScores {
    pub ratings: Vec<Rating>,
}

impl MushraScores {
    /// Parses `listener,system,sentence,score` rows. A first row whose
    /// score field is `score` is treated as a header.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut ratings = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Format(format!("scores: {e}")))?;
            let line = i + 1;
            if rec.len() != 4 {
                return Err(Error::Format(format!(
                    "scores line {line}: expected 4 fields, got {}",
                    rec.len()
                )));
            }
            if i == 0 && rec[3].eq_ignore_ascii_case("score") {
                continue;
            }
            let score: i64 = rec[3]
                .parse()
                .map_err(|_| Error::Format(format!("scores line {line}: score {:?} is not an integer", &rec[3])))?;
            if !(0..=100).contains(&score) {
                return Err(Error::Format(format!(
                    "scores line {line}: score {score} outside [0, 100]"
                )));
            }
            ratings.push(Rating {
                listener: rec[0].to_string(),
                system: rec[1].to_string(),
                sentence: rec[2].to_string(),
                score: score as u8,
            });
        }
        Ok(Self { ratings })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text)
    }

    /// Scores per system, systems in lexicographic order.
    pub fn by_system(&self) -> BTreeMap<&str, Vec<f64>> {
        let mut m: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        for r in &self.ratings {
            m.entry(r.system.as_str()).or_default().push(r.score as f64);
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemSummary {
    pub system: String,
    pub n: usize,
    pub mean: f64,
    pub median: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairTest {
    pub system_a: String,
    pub system_b: String,
    pub result: RanksumResult,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MushraReport {
    pub systems: Vec<SystemSummary>,
    pub pairs: Vec<PairTest>,
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Per-system summaries and a rank-sum test for every pair of systems.
pub fn mushra_report(scores: &MushraScores) -> Result<MushraReport> {
    let groups = scores.by_system();
    if groups.is_empty() {
        return Err(Error::EmptySample);
    }
    let systems = groups
        .iter()
        .map(|(s, v)| SystemSummary {
            system: s.to_string(),
            n: v.len(),
            mean: v.iter().sum::<f64>() / v.len() as f64,
            median: median(v),
        })
        .collect();
    let names: Vec<&&str> = groups.keys().collect();
    let mut pairs = Vec::new();
    for i in 0..names.len() {
        for j in i + 1..names.len() {
            pairs.push(PairTest {
                system_a: names[i].to_string(),
                system_b: names[j].to_string(),
                result: ranksum_test(&groups[*names[i]], &groups[*names[j]])?,
            });
        }
    }
    Ok(MushraReport { systems, pairs })
}

impl MushraReport {
    /// Two TSV blocks: system summaries, then pairwise tests at the 0.05 level.
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("system\tn\tmean\tmedian\n");
        for x in &self.systems {
            writeln!(s, "{}\t{}\t{:.4}\t{:.4}", x.system, x.n, x.mean, x.median).unwrap();
        }
        s.push_str("\nsystem_a\tsystem_b\tU\tp\tmethod\tsignificant\n");
        for p in &self.pairs {
            writeln!(
                s,
                "{}\t{}\t{}\t{:.6}\t{}\t{}",
                p.system_a,
                p.system_b,
                p.result.u,
                p.result.p,
                if p.result.exact { "exact" } else { "normal" },
                p.result.significant()
            )
            .unwrap();
        }
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CSV: &str = "listener,system,sentence,score\n\
        l1,ref,s1,95\nl1,base,s1,40\nl1,wg,s1,60\n\
        l2,ref,s1,90\nl2,base,s1,35\nl2,wg,s1,55\n";

    #[test]
    fn parse_and_report() {
        let s = MushraScores::from_csv(CSV).unwrap();
        assert_eq!(s.ratings.len(), 6);
        let r = mushra_report(&s).unwrap();
        let names: Vec<&str> = r.systems.iter().map(|x| x.system.as_str()).collect();
        assert_eq!(names, ["base", "ref", "wg"]);
        assert_eq!(r.systems[0].mean, 37.5);
        assert_eq!(r.pairs.len(), 3);
        assert_eq!(
            (r.pairs[0].system_a.as_str(), r.pairs[0].system_b.as_str()),
            ("base", "ref")
        );
        assert_eq!(r.pairs[0].result.u, 0.0);
        let tsv = r.to_tsv();
        assert!(tsv.contains("base\tref\t0\t0.333333\texact\tfalse"));
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(MushraScores::from_csv("l1,a,s1,101\n").is_err());
        assert!(MushraScores::from_csv("l1,a,s1,7.5\n").is_err());
        assert!(MushraScores::from_csv("l1,a,s1\n").is_err());
        assert!(MushraScores::from_csv("l1,a,s1,-1\n").is_err());
    }

    #[test]
    fn headerless() {
        let s = MushraScores::from_csv("a,x,1,10\nb,y,1,20\n").unwrap();
        assert_eq!(s.ratings.len(), 2);
    }
}
