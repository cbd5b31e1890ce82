//! Seeded, class-stratified real/generated training mixtures.
//!
//! Totals are `round_half_up(fraction × unit_size)`; the total for each
//! origin is split across classes in proportion to each class's share of
//! that pool using largest-remainder rounding (ties go to the lower class
//! id). Inside a class, samples come from a partial Fisher-Yates shuffle
//! seeded with `mix_seed([seed, origin, class_id])`, so the plan does not
//! depend on thread count or on how other classes are drawn.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{ClassCatalog, DatasetManifest, Origin};
use crate::error::{Error, Result};
use crate::jsonl;
use crate::rng::{mix_seed, SplitMix64, GENERATOR_ID};

/// Real-data fractions of the proportion grid.
pub const GRID_REAL_FRACTIONS: [f64; 3] = [0.25, 0.5, 1.0];
/// Generated-data fractions of the proportion grid.
pub const GRID_GEN_FRACTIONS: [f64; 3] = [0.5, 1.0, 2.0];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub origin: Origin,
    pub sample_id: String,
    pub class_id: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanHeader {
    pub real_fraction: f64,
    pub gen_fraction: f64,
    pub unit_size: u64,
    pub seed: u64,
    pub generator: String,
    pub real_count: u64,
    pub generated_count: u64,
}

/// Entries are ordered real first, then generated; within an origin by class
/// id, then by draw order.
#[derive(Debug, Clone, PartialEq)]
pub struct MixturePlan {
    pub real_fraction: f64,
    pub gen_fraction: f64,
    pub unit_size: u64,
    pub seed: u64,
    pub entries: Vec<PlanEntry>,
}

impl MixturePlan {
    pub fn count(&self, origin: Origin) -> usize {
        self.entries.iter().filter(|e| e.origin == origin).count()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn header(&self) -> PlanHeader {
        PlanHeader {
            real_fraction: self.real_fraction,
            gen_fraction: self.gen_fraction,
            unit_size: self.unit_size,
            seed: self.seed,
            generator: GENERATOR_ID.to_string(),
            real_count: self.count(Origin::Real) as u64,
            generated_count: self.count(Origin::Generated) as u64,
        }
    }

    /// Header object line followed by one entry per line.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = jsonl::to_string([self.header()])?;
        out.push_str(&jsonl::to_string(&self.entries)?);
        Ok(out)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        jsonl::write_file(path, &self.to_jsonl()?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut lines = jsonl::read_lines(path)?.into_iter();
        let (n, first) = lines.next().ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            reason: "missing plan header".into(),
        })?;
        let header: PlanHeader = jsonl::parse_line(path, n, &first)?;
        if header.generator != GENERATOR_ID {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: n,
                reason: format!("unsupported generator {:?}", header.generator),
            });
        }
        let entries = lines
            .map(|(n, l)| jsonl::parse_line(path, n, &l))
            .collect::<Result<Vec<PlanEntry>>>()?;
        Ok(Self {
            real_fraction: header.real_fraction,
            gen_fraction: header.gen_fraction,
            unit_size: header.unit_size,
            seed: header.seed,
            entries,
        })
    }
}

/// `floor(x + 0.5)` for finite nonnegative `x`.
pub fn round_half_up(x: f64) -> u64 {
    (x + 0.5).floor() as u64
}

/// Splits `total` across `weights` proportionally with largest-remainder
/// rounding. Requires `total <= sum(weights)` when the result must respect
/// per-weight capacity.
pub fn largest_remainder(total: u64, weights: &[u64]) -> Vec<u64> {
    let sum: u128 = weights.iter().map(|&w| w as u128).sum();
    if sum == 0 {
        return vec![0; weights.len()];
    }
    let mut alloc = Vec::with_capacity(weights.len());
    let mut rems = Vec::with_capacity(weights.len());
    for (i, &w) in weights.iter().enumerate() {
        let num = total as u128 * w as u128;
        alloc.push((num / sum) as u64);
        rems.push((num % sum, i));
    }
    let short = total - alloc.iter().sum::<u64>();
    rems.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, i) in rems.iter().take(short as usize) {
        alloc[i] += 1;
    }
    alloc
}

fn check_fraction(name: &str, f: f64) -> Result<()> {
    if f.is_finite() && f >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidValue(format!("{name} must be a finite nonnegative number, got {f}")))
    }
}

/// Plans over a real and a generated pool labelled by one catalog.
#[derive(Debug, Clone, Copy)]
pub struct MixturePlanner<'a> {
    catalog: &'a ClassCatalog,
    real: &'a DatasetManifest,
    generated: &'a DatasetManifest,
}

impl<'a> MixturePlanner<'a> {
    pub fn new(
        catalog: &'a ClassCatalog,
        real: &'a DatasetManifest,
        generated: &'a DatasetManifest,
    ) -> Result<Self> {
        real.validate_classes(catalog)?;
        generated.validate_classes(catalog)?;
        Ok(Self {
            catalog,
            real,
            generated,
        })
    }

    pub fn catalog(&self) -> &ClassCatalog {
        self.catalog
    }

    /// `real_fraction × unit_size` real plus `gen_fraction × unit_size`
    /// generated samples.
    pub fn plan_mixture(&self, real_fraction: f64, gen_fraction: f64, unit_size: u64, seed: u64) -> Result<MixturePlan> {
        if unit_size == 0 {
            return Err(Error::InvalidValue("unit_size must be positive".into()));
        }
        check_fraction("real_fraction", real_fraction)?;
        check_fraction("gen_fraction", gen_fraction)?;
        let n_real = round_half_up(real_fraction * unit_size as f64);
        let n_gen = round_half_up(gen_fraction * unit_size as f64);
        let mut entries = draw(self.real, Origin::Real, n_real, seed)?;
        entries.extend(draw(self.generated, Origin::Generated, n_gen, seed)?);
        Ok(MixturePlan {
            real_fraction,
            gen_fraction,
            unit_size,
            seed,
            entries,
        })
    }

    /// Exactly `budget` samples, `round_half_up(gen_share × budget)` of them
    /// generated.
    pub fn plan_fixed_budget(&self, gen_share: f64, budget: u64, seed: u64) -> Result<MixturePlan> {
        if budget == 0 {
            return Err(Error::InvalidValue("budget must be positive".into()));
        }
        if !(0.0..=1.0).contains(&gen_share) {
            return Err(Error::InvalidValue(format!("gen_share must lie in [0, 1], got {gen_share}")));
        }
        let n_gen = round_half_up(gen_share * budget as f64);
        let n_real = budget - n_gen;
        let mut entries = draw(self.real, Origin::Real, n_real, seed)?;
        entries.extend(draw(self.generated, Origin::Generated, n_gen, seed)?);
        Ok(MixturePlan {
            real_fraction: n_real as f64 / budget as f64,
            gen_fraction: n_gen as f64 / budget as f64,
            unit_size: budget,
            seed,
            entries,
        })
    }

    /// The 3×3 grid of [`GRID_REAL_FRACTIONS`] × [`GRID_GEN_FRACTIONS`],
    /// real-major. Cell `i` is seeded with `mix_seed([seed, i])`.
    pub fn grid_plans(&self, unit_size: u64, seed: u64) -> Result<Vec<MixturePlan>> {
        let mut plans = Vec::with_capacity(9);
        for (i, (rf, gf)) in GRID_REAL_FRACTIONS
            .iter()
            .flat_map(|&r| GRID_GEN_FRACTIONS.iter().map(move |&g| (r, g)))
            .enumerate()
        {
            plans.push(self.plan_mixture(rf, gf, unit_size, mix_seed(&[seed, i as u64]))?);
        }
        Ok(plans)
    }
}

fn origin_stream(origin: Origin) -> u64 {
    match origin {
        Origin::Real => 0,
        Origin::Generated => 1,
    }
}

fn draw(pool: &DatasetManifest, origin: Origin, count: u64, seed: u64) -> Result<Vec<PlanEntry>> {
    if count > pool.len() as u64 {
        return Err(Error::PoolTooSmall {
            origin: origin.as_str(),
            required: count,
            available: pool.len() as u64,
        });
    }
    let mut by_class: BTreeMap<u32, Vec<&str>> = BTreeMap::new();
    for e in pool.entries() {
        by_class.entry(e.class_id).or_default().push(&e.sample_id);
    }
    let classes: Vec<(u32, Vec<&str>)> = by_class.into_iter().collect();
    let sizes: Vec<u64> = classes.iter().map(|(_, ids)| ids.len() as u64).collect();
    let quotas = largest_remainder(count, &sizes);

    let per_class: Vec<Vec<PlanEntry>> = classes
        .into_par_iter()
        .zip(quotas.into_par_iter())
        .map(|((class_id, mut ids), quota)| {
            let k = quota as usize;
            SplitMix64::new(mix_seed(&[seed, origin_stream(origin), class_id as u64]))
                .partial_shuffle(&mut ids, k);
            ids[..k]
                .iter()
                .map(|id| PlanEntry {
                    origin,
                    sample_id: id.to_string(),
                    class_id,
                })
                .collect()
        })
        .collect();
    Ok(per_class.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::DatasetEntry;
    use std::collections::HashSet;

    fn pool(origin: Origin, per_class: &[usize]) -> DatasetManifest {
        let tag = origin.as_str();
        let entries = per_class
            .iter()
            .enumerate()
            .flat_map(|(c, &n)| {
                (0..n).map(move |i| DatasetEntry {
                    sample_id: format!("{tag}-{c}-{i}"),
                    class_id: c as u32,
                    uri: String::new(),
                })
            })
            .collect();
        DatasetManifest::new(tag, origin, entries).unwrap()
    }

    fn catalog(k: usize) -> ClassCatalog {
        ClassCatalog::from_names("c", (0..k).map(|i| format!("class{i}"))).unwrap()
    }

    #[test]
    fn largest_remainder_sums_and_is_within_one() {
        let w = [3u64, 3, 3];
        assert_eq!(largest_remainder(10, &w), vec![4, 3, 3]);
        let w = [1u64, 2, 7];
        let a = largest_remainder(5, &w);
        assert_eq!(a.iter().sum::<u64>(), 5);
        assert_eq!(a, vec![1, 1, 3]);
    }

    #[test]
    fn counts_from_grid_arithmetic() {
        let cat = catalog(4);
        let real = pool(Origin::Real, &[40, 30, 20, 10]);
        let generated = pool(Origin::Generated, &[50, 50, 50, 50]);
        let p = MixturePlanner::new(&cat, &real, &generated).unwrap();
        let plan = p.plan_mixture(0.25, 0.5, 100, 1).unwrap();
        assert_eq!((plan.count(Origin::Real), plan.count(Origin::Generated)), (25, 50));
    }

    #[test]
    fn zero_generated_fraction_is_real_subsample() {
        let cat = catalog(2);
        let real = pool(Origin::Real, &[10, 10]);
        let generated = pool(Origin::Generated, &[10, 10]);
        let p = MixturePlanner::new(&cat, &real, &generated).unwrap();
        let plan = p.plan_mixture(0.5, 0.0, 10, 3).unwrap();
        assert_eq!(plan.len(), 5);
        assert!(plan.entries.iter().all(|e| e.origin == Origin::Real));
    }

    #[test]
    fn pool_too_small_reports_counts() {
        let cat = catalog(1);
        let real = pool(Origin::Real, &[10]);
        let generated = pool(Origin::Generated, &[15]);
        let p = MixturePlanner::new(&cat, &real, &generated).unwrap();
        match p.plan_mixture(1.0, 2.0, 10, 0) {
            Err(Error::PoolTooSmall { origin, required, available }) => {
                assert_eq!((origin, required, available), ("generated", 20, 15));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_class_in_pool_rejected() {
        let cat = catalog(1);
        let real = pool(Origin::Real, &[1, 1]);
        let generated = pool(Origin::Generated, &[1]);
        assert!(matches!(
            MixturePlanner::new(&cat, &real, &generated),
            Err(Error::UnknownClass(1))
        ));
    }

    #[test]
    fn grid_sizes_and_zero_unit() {
        let cat = catalog(1);
        let real = pool(Origin::Real, &[100]);
        let generated = pool(Origin::Generated, &[200]);
        let p = MixturePlanner::new(&cat, &real, &generated).unwrap();
        let sizes: Vec<_> = p.grid_plans(100, 11).unwrap().iter().map(MixturePlan::len).collect();
        assert_eq!(sizes, [75, 125, 225, 100, 150, 250, 150, 200, 300]);
        assert!(p.grid_plans(0, 11).is_err());
    }

    #[test]
    fn fixed_budget_extremes() {
        let cat = catalog(2);
        let real = pool(Origin::Real, &[20, 20]);
        let generated = pool(Origin::Generated, &[20, 20]);
        let p = MixturePlanner::new(&cat, &real, &generated).unwrap();
        let all_real = p.plan_fixed_budget(0.0, 40, 1).unwrap();
        assert_eq!(all_real.count(Origin::Real), 40);
        let all_gen = p.plan_fixed_budget(1.0, 40, 1).unwrap();
        assert_eq!(all_gen.count(Origin::Generated), 40);
        let mixed = p.plan_fixed_budget(0.75, 40, 1).unwrap();
        assert_eq!((mixed.count(Origin::Generated), mixed.count(Origin::Real)), (30, 10));
        assert!(p.plan_fixed_budget(1.5, 40, 1).is_err());
    }

    #[test]
    fn no_duplicates_and_deterministic() {
        let cat = catalog(3);
        let real = pool(Origin::Real, &[7, 11, 13]);
        let generated = pool(Origin::Generated, &[17, 19, 23]);
        let p = MixturePlanner::new(&cat, &real, &generated).unwrap();
        let a = p.plan_mixture(0.9, 1.7, 30, 99).unwrap();
        let b = p.plan_mixture(0.9, 1.7, 30, 99).unwrap();
        assert_eq!(a.to_jsonl().unwrap(), b.to_jsonl().unwrap());
        let uniq: HashSet<_> = a.entries.iter().map(|e| (e.origin, &e.sample_id)).collect();
        assert_eq!(uniq.len(), a.len());
        let c = p.plan_mixture(0.9, 1.7, 30, 100).unwrap();
        assert_ne!(a.entries, c.entries);
    }

    #[test]
    fn plan_file_round_trip() {
        let cat = catalog(2);
        let real = pool(Origin::Real, &[5, 5]);
        let generated = pool(Origin::Generated, &[5, 5]);
        let plan = MixturePlanner::new(&cat, &real, &generated)
            .unwrap()
            .plan_mixture(0.5, 1.0, 6, 4)
            .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("plan.jsonl");
        plan.write(&path).unwrap();
        assert_eq!(MixturePlan::read(&path).unwrap(), plan);
    }
}
