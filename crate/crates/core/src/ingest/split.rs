use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::Path;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const RATIOS: [f64; 3] = [0.85, 0.10, 0.05];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Subset {
    Train,
    Val,
    Test,
}

impl Subset {
    pub fn as_str(self) -> &'static str {
        match self {
            Subset::Train => "train",
            Subset::Val => "val",
            Subset::Test => "test",
        }
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Subset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Subset::Train),
            "val" => Ok(Subset::Val),
            "test" => Ok(Subset::Test),
            other => Err(Error::Format(format!("unknown subset {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DatasetSplit {
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
}

impl DatasetSplit {
    pub fn subset(&self, s: Subset) -> &[String] {
        match s {
            Subset::Train => &self.train,
            Subset::Val => &self.val,
            Subset::Test => &self.test,
        }
    }

    pub fn len(&self) -> usize {
        self.train.len() + self.val.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Subset sizes by largest-remainder rounding of the 85/10/5 ratios. Ties in
/// the remainder go to the earlier subset.
fn subset_sizes(n: usize) -> [usize; 3] {
    let exact: Vec<f64> = RATIOS.iter().map(|r| r * n as f64).collect();
    let mut sizes = [0usize; 3];
    for (s, e) in sizes.iter_mut().zip(&exact) {
        *s = e.floor() as usize;
    }
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    let mut left = n - sizes.iter().sum::<usize>();
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        sizes[i] += 1;
        left -= 1;
    }
    sizes
}

/// Deterministic 85/10/5 split.
///
/// Identifiers are sorted, then shuffled with a Fisher-Yates pass driven by
/// `ChaCha8Rng::seed_from_u64(seed)`: for `i` from `n-1` down to 1, swap `i`
/// with `next_u64() % (i + 1)`. The first block goes to train, then val, then
/// test.
pub fn split_dataset<S: AsRef<str>>(ids: &[S], seed: u64) -> Result<DatasetSplit> {
    let uniq: BTreeSet<&str> = ids.iter().map(|s| s.as_ref()).collect();
    if uniq.len() != ids.len() {
        return Err(Error::Invalid("duplicate utterance identifiers".into()));
    }
    if ids.len() < 3 {
        return Err(Error::TooFewUtterances(ids.len()));
    }
    let mut v: Vec<String> = uniq.into_iter().map(str::to_owned).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in (1..v.len()).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        v.swap(i, j);
    }
    let [ntr, nva, _] = subset_sizes(v.len());
    let test = v.split_off(ntr + nva);
    let val = v.split_off(ntr);
    Ok(DatasetSplit { train: v, val, test })
}

/// Writes `<id>\t<train|val|test>` lines.
pub fn write_split_manifest(split: &DatasetSplit, path: &Path) -> Result<()> {
    let mut out = String::new();
    for s in [Subset::Train, Subset::Val, Subset::Test] {
        for id in split.subset(s) {
            out.push_str(&format!("{id}\t{s}\n"));
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_split_manifest(path: &Path) -> Result<DatasetSplit> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut split = DatasetSplit::default();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (id, s) = line
            .split_once('\t')
            .ok_or_else(|| Error::Format(format!("{}:{}: expected <id>\\t<subset>", path.display(), n + 1)))?;
        match s.trim().parse()? {
            Subset::Train => split.train.push(id.to_owned()),
            Subset::Val => split.val.push(id.to_owned()),
            Subset::Test => split.test.push(id.to_owned()),
        }
    }
    Ok(split)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("utt{i:03}")).collect()
    }

    #[test]
    fn sizes_for_corpus() {
        let s = split_dataset(&ids(209), 1).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (178, 21, 10));
        let s = split_dataset(&ids(20), 1).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (17, 2, 1));
    }

    #[test]
    fn deterministic() {
        assert_eq!(split_dataset(&ids(50), 9).unwrap(), split_dataset(&ids(50), 9).unwrap());
        assert_ne!(
            split_dataset(&ids(50), 9).unwrap(),
            split_dataset(&ids(50), 10).unwrap()
        );
    }

    #[test]
    fn too_few() {
        assert!(matches!(split_dataset(&ids(2), 0), Err(Error::TooFewUtterances(2))));
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("split.tsv");
        let s = split_dataset(&ids(30), 4).unwrap();
        write_split_manifest(&s, &p).unwrap();
        assert_eq!(read_split_manifest(&p).unwrap(), s);
    }

    proptest::proptest! {
        #[test]
        fn is_partition(n in 3usize..300, seed in proptest::num::u64::ANY) {
            let input = ids(n);
            let s = split_dataset(&input, seed).unwrap();
            let mut all: Vec<String> = s.train.iter().chain(&s.val).chain(&s.test).cloned().collect();
            all.sort();
            proptest::prop_assert_eq!(&all, &input);
            for (got, r) in [s.train.len(), s.val.len(), s.test.len()].iter().zip(RATIOS) {
                proptest::prop_assert!((*got as f64 - r * n as f64).abs() <= 1.0);
            }
        }
    }
}
