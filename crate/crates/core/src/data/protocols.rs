use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::FeatureSet;
use crate::numerics::Matrix;
use crate::{Error, Result, Rng};

/// Novel samples drawn per novel class by [`build_novelty_protocol`].
pub const DEFAULT_NOVEL_PER_CLASS: usize = 50;

/// Origin of a split row: index of the input set and row within it.
///
/// For the abnormality protocol the abnormal set is numbered after the
/// normal classes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RowRef {
    pub set: usize,
    pub row: usize,
}

/// Train/test material for one target class.
#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolSplit {
    pub class: String,
    pub train: FeatureSet,
    pub target_test: FeatureSet,
    pub negative_test: FeatureSet,
    pub train_rows: Vec<RowRef>,
    pub target_test_rows: Vec<RowRef>,
    pub negative_rows: Vec<RowRef>,
}

impl ProtocolSplit {
    /// True when no source row is used for both training and testing.
    pub fn is_disjoint(&self) -> bool {
        let mut train = self.train_rows.clone();
        train.sort_unstable();
        self.target_test_rows
            .iter()
            .chain(&self.negative_rows)
            .all(|r| train.binary_search(r).is_err())
    }
}

fn check_dims(sets: &[&FeatureSet]) -> Result<usize> {
    let d = sets.first().map_or(0, |s| s.d());
    if let Some(bad) = sets.iter().find(|s| s.d() != d) {
        return Err(Error::Protocol(format!(
            "feature set '{}' has dimension {}, expected {d}",
            bad.source,
            bad.d()
        )));
    }
    Ok(d)
}

fn gather(sets: &[&FeatureSet], rows: &[RowRef], d: usize, tag: &str) -> FeatureSet {
    let mut data = Vec::with_capacity(rows.len() * d);
    for r in rows {
        data.extend_from_slice(sets[r.set].data.row(r.row));
    }
    FeatureSet::new(Matrix::from_raw(rows.len(), d, data), tag)
}

fn refs(set: usize, rows: &[usize]) -> Vec<RowRef> {
    rows.iter().map(|&row| RowRef { set, row }).collect()
}

/// Abnormality detection: each normal class is a target; its test partition
/// is as large as the abnormal sample drawn for it, so test targets and
/// abnormal negatives are balanced.
///
/// The test size is `min(abnormal.n, normal.n / 2)`; the rest of the normal
/// class is training data.
pub fn build_abnormality_protocol(
    normal: &[FeatureSet],
    abnormal: &FeatureSet,
    rng: &Rng,
) -> Result<Vec<ProtocolSplit>> {
    if normal.is_empty() {
        return Err(Error::Protocol("no normal classes supplied".into()));
    }
    if abnormal.n() < 1 {
        return Err(Error::Protocol(
            "abnormality protocol needs at least 1 abnormal sample, got 0".into(),
        ));
    }
    let mut sets: Vec<&FeatureSet> = normal.iter().collect();
    sets.push(abnormal);
    let d = check_dims(&sets)?;
    let abnormal_idx = normal.len();

    normal
        .iter()
        .enumerate()
        .map(|(c, class)| {
            if class.n() < 2 {
                return Err(Error::Protocol(format!(
                    "class '{}' needs at least 2 normal samples (1 train + 1 test), got {}",
                    class.source,
                    class.n()
                )));
            }
            let t = abnormal.n().min(class.n() / 2);
            let mut class_rng = rng.substream(&class.source);
            let perm = class_rng.permutation(class.n());
            let mut ab_rng = rng.substream(&format!("{}/abnormal", class.source));
            let ab_perm = ab_rng.permutation(abnormal.n());
            let test_rows = refs(c, &perm[..t]);
            let train_rows = refs(c, &perm[t..]);
            let negative_rows = refs(abnormal_idx, &ab_perm[..t]);
            Ok(ProtocolSplit {
                class: class.source.clone(),
                train: gather(&sets, &train_rows, d, &format!("{}/train", class.source)),
                target_test: gather(&sets, &test_rows, d, &format!("{}/test", class.source)),
                negative_test: gather(&sets, &negative_rows, d, "abnormal/test"),
                train_rows,
                target_test_rows: test_rows,
                negative_rows,
            })
        })
        .collect()
}

/// Active authentication: every user is a target in turn, trained on 80% of
/// their data and tested against everyone else's 20% test partitions.
///
/// Fractional boundaries round toward train (9 samples: 8 train, 1 test).
pub fn build_auth_protocol(per_user: &[FeatureSet], rng: &Rng) -> Result<Vec<ProtocolSplit>> {
    if per_user.len() < 2 {
        return Err(Error::Protocol(format!(
            "authentication protocol needs at least 2 users, got {}",
            per_user.len()
        )));
    }
    let sets: Vec<&FeatureSet> = per_user.iter().collect();
    let d = check_dims(&sets)?;

    let mut partitions = Vec::with_capacity(per_user.len());
    for (u, user) in per_user.iter().enumerate() {
        let n_test = user.n() / 5;
        if n_test == 0 {
            return Err(Error::Protocol(format!(
                "user '{}' needs at least 5 samples for an 80/20 split, got {}",
                user.source,
                user.n()
            )));
        }
        let perm = rng.substream(&user.source).permutation(user.n());
        let n_train = user.n() - n_test;
        partitions.push((refs(u, &perm[..n_train]), refs(u, &perm[n_train..])));
    }

    Ok(per_user
        .iter()
        .enumerate()
        .map(|(u, user)| {
            let (train_rows, test_rows) = partitions[u].clone();
            let negative_rows: Vec<RowRef> = partitions
                .iter()
                .enumerate()
                .filter(|&(o, _)| o != u)
                .flat_map(|(_, (_, test))| test.iter().copied())
                .collect();
            ProtocolSplit {
                class: user.source.clone(),
                train: gather(&sets, &train_rows, d, &format!("{}/train", user.source)),
                target_test: gather(&sets, &test_rows, d, &format!("{}/test", user.source)),
                negative_test: gather(&sets, &negative_rows, d, &format!("{}/impostors", user.source)),
                train_rows,
                target_test_rows: test_rows,
                negative_rows,
            }
        })
        .collect())
}

/// Novelty detection: the first half of the classes are targets (split
/// evenly into train and test, odd counts rounding toward train); the second
/// half form a novel pool from which up to `novel_per_class` samples per
/// class make up the shared negative test set.
pub fn build_novelty_protocol(
    per_class: &[FeatureSet],
    rng: &Rng,
    novel_per_class: usize,
) -> Result<Vec<ProtocolSplit>> {
    if per_class.len() < 2 || !per_class.len().is_multiple_of(2) {
        return Err(Error::Protocol(format!(
            "novelty protocol needs an even number of classes (>= 2), got {}",
            per_class.len()
        )));
    }
    let sets: Vec<&FeatureSet> = per_class.iter().collect();
    let d = check_dims(&sets)?;
    let half = per_class.len() / 2;

    let mut negative_rows = Vec::new();
    for (c, class) in per_class.iter().enumerate().skip(half) {
        let perm = rng.substream(&class.source).permutation(class.n());
        let take = novel_per_class.min(class.n());
        negative_rows.extend(refs(c, &perm[..take]));
    }
    if negative_rows.is_empty() {
        return Err(Error::Protocol("novel classes contain no samples".into()));
    }
    let negative_test = gather(&sets, &negative_rows, d, "novel/test");

    per_class[..half]
        .iter()
        .enumerate()
        .map(|(c, class)| {
            if class.n() < 2 {
                return Err(Error::Protocol(format!(
                    "target class '{}' needs at least 2 samples, got {}",
                    class.source,
                    class.n()
                )));
            }
            let perm = rng.substream(&class.source).permutation(class.n());
            let n_test = class.n() / 2;
            let n_train = class.n() - n_test;
            let train_rows = refs(c, &perm[..n_train]);
            let test_rows = refs(c, &perm[n_train..]);
            Ok(ProtocolSplit {
                class: class.source.clone(),
                train: gather(&sets, &train_rows, d, &format!("{}/train", class.source)),
                target_test: gather(&sets, &test_rows, d, &format!("{}/test", class.source)),
                negative_test: negative_test.clone(),
                train_rows,
                target_test_rows: test_rows,
                negative_rows: negative_rows.clone(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn class(name: &str, n: usize, d: usize, offset: f64) -> FeatureSet {
        let data = (0..n * d).map(|i| offset + i as f64).collect();
        FeatureSet::new(Matrix::from_vec(n, d, data).unwrap(), name)
    }

    #[test]
    fn abnormality_counts() {
        let normal = [class("cat", 100, 3, 0.0)];
        let abnormal = class("weird", 40, 3, 1000.0);
        let splits = build_abnormality_protocol(&normal, &abnormal, &Rng::new(1)).unwrap();
        let s = &splits[0];
        assert_eq!((s.train.n(), s.target_test.n(), s.negative_test.n()), (60, 40, 40));
        assert!(s.is_disjoint());
    }

    #[test]
    fn abnormality_needs_abnormal_data() {
        let normal = [class("cat", 10, 3, 0.0)];
        let abnormal = FeatureSet::new(Matrix::zeros(0, 3), "weird");
        assert!(matches!(
            build_abnormality_protocol(&normal, &abnormal, &Rng::new(1)),
            Err(Error::Protocol(_))
        ));
    }

    #[test]
    fn auth_counts() {
        let users: Vec<FeatureSet> = (0..3).map(|u| class(&u.to_string(), 10, 2, 100.0 * u as f64)).collect();
        let splits = build_auth_protocol(&users, &Rng::new(4)).unwrap();
        assert_eq!(splits.len(), 3);
        for (u, s) in splits.iter().enumerate() {
            assert_eq!((s.train.n(), s.target_test.n(), s.negative_test.n()), (8, 2, 4));
            assert!(s.is_disjoint());
            assert!(s.negative_rows.iter().all(|r| r.set != u));
        }
        // a user's training rows never show up as anyone's impostor data
        for (u, s) in splits.iter().enumerate() {
            for other in &splits {
                assert!(other
                    .negative_rows
                    .iter()
                    .all(|r| r.set != u || !s.train_rows.contains(r)));
            }
        }
    }

    #[test]
    fn auth_rounds_toward_train() {
        let users = [class("a", 9, 1, 0.0), class("b", 9, 1, 50.0)];
        let splits = build_auth_protocol(&users, &Rng::new(4)).unwrap();
        assert_eq!((splits[0].train.n(), splits[0].target_test.n()), (8, 1));
    }

    #[test]
    fn auth_single_user() {
        assert!(matches!(
            build_auth_protocol(&[class("a", 10, 1, 0.0)], &Rng::new(0)),
            Err(Error::Protocol(_))
        ));
    }

    #[test]
    fn novelty_counts_and_shared_negatives() {
        let classes: Vec<FeatureSet> = (0..4)
            .map(|c| class(&alloc::format!("c{c}"), 20, 2, 100.0 * c as f64))
            .collect();
        let splits = build_novelty_protocol(&classes, &Rng::new(9), DEFAULT_NOVEL_PER_CLASS).unwrap();
        assert_eq!(splits.len(), 2);
        for s in &splits {
            assert_eq!((s.train.n(), s.target_test.n(), s.negative_test.n()), (10, 10, 40));
            assert!(s.is_disjoint());
            assert!(s.negative_rows.iter().all(|r| r.set >= 2));
        }
        assert_eq!(splits[0].negative_test, splits[1].negative_test);
        assert_eq!(splits[0].class, "c0");
        assert_eq!(splits[1].class, "c1");
    }

    #[test]
    fn novelty_odd_classes() {
        let classes: Vec<FeatureSet> = (0..3).map(|c| class(&alloc::format!("c{c}"), 4, 2, 0.0)).collect();
        assert!(matches!(
            build_novelty_protocol(&classes, &Rng::new(9), 50),
            Err(Error::Protocol(_))
        ));
    }

    #[test]
    fn membership_ignores_input_order() {
        let a = class("alice", 10, 2, 0.0);
        let b = class("bob", 10, 2, 500.0);
        let c = class("carol", 10, 2, 900.0);
        let s1 = build_auth_protocol(&[a.clone(), b.clone(), c.clone()], &Rng::new(3)).unwrap();
        let s2 = build_auth_protocol(&[c, a, b], &Rng::new(3)).unwrap();
        assert_eq!(s1[0].train, s2[1].train);
        assert_eq!(s1[0].target_test, s2[1].target_test);
    }
}
