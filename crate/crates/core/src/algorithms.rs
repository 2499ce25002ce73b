//! Deterministic online bin-packing algorithms used as subjects for the
//! adversary.
//!
//! Every algorithm sees the arriving item's size and the current bins, and
//! answers with a bin index; the index equal to the number of bins opens a
//! new one. Ties are always broken towards the lowest index.

use std::any::Any;
use std::cmp::Ordering;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::exactnum::{LayeredValue, NumError};
use crate::packing::{Offer, Packing};
use crate::rational;

/// Opaque saved state of an algorithm.
pub struct AlgorithmSnapshot(Box<dyn Any + Send>);

impl fmt::Debug for AlgorithmSnapshot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("AlgorithmSnapshot")
    }
}

pub trait OnlineAlgorithm: Send {
    fn name(&self) -> String;

    /// Picks a bin for the item. The harness places the item there and
    /// aborts the run if it does not fit.
    fn choose(&mut self, offer: &Offer<'_>, packing: &Packing) -> Result<usize, NumError>;

    /// Saves internal state for forking play; `None` when unsupported, in
    /// which case the harness replays the shared prefix instead.
    fn snapshot(&self) -> Option<AlgorithmSnapshot>;

    fn restore(&mut self, snapshot: &AlgorithmSnapshot);

    /// Returns to the state before the first item.
    fn reset(&mut self);
}

fn snapshot_of<T: Clone + Send + 'static>(alg: &T) -> Option<AlgorithmSnapshot> {
    Some(AlgorithmSnapshot(Box::new(alg.clone())))
}

fn restore_into<T: Clone + 'static>(alg: &mut T, snapshot: &AlgorithmSnapshot) {
    *alg = snapshot
        .0
        .downcast_ref::<T>()
        .expect("snapshot taken from a different algorithm")
        .clone();
}

fn first_fit_index(offer: &Offer<'_>, packing: &Packing) -> Result<usize, NumError> {
    for i in 0..packing.len() {
        if packing.fits(i, offer)? {
            return Ok(i);
        }
    }
    Ok(packing.len())
}

fn compare_loads(packing: &Packing, a: usize, b: usize) -> Result<Ordering, NumError> {
    let (x, y) = (&packing.bins()[a], &packing.bins()[b]);
    let diff = x.approx_load() - y.approx_load();
    if diff.abs() > 1e-12 {
        return Ok(if diff > 0.0 { Ordering::Greater } else { Ordering::Less });
    }
    packing.ctx().compare(&x.load, &y.load)
}

/// Packs into the most recently opened bin if it fits, else opens a new one.
#[derive(Clone, Debug, Default)]
pub struct NextFit;

impl OnlineAlgorithm for NextFit {
    fn name(&self) -> String {
        "next-fit".into()
    }

    fn choose(&mut self, offer: &Offer<'_>, packing: &Packing) -> Result<usize, NumError> {
        let n = packing.len();
        if n > 0 && packing.fits(n - 1, offer)? {
            return Ok(n - 1);
        }
        Ok(n)
    }

    fn snapshot(&self) -> Option<AlgorithmSnapshot> {
        snapshot_of(self)
    }

    fn restore(&mut self, snapshot: &AlgorithmSnapshot) {
        restore_into(self, snapshot)
    }

    fn reset(&mut self) {}
}

/// Lowest-indexed bin that fits.
#[derive(Clone, Debug, Default)]
pub struct FirstFit;

impl OnlineAlgorithm for FirstFit {
    fn name(&self) -> String {
        "first-fit".into()
    }

    fn choose(&mut self, offer: &Offer<'_>, packing: &Packing) -> Result<usize, NumError> {
        first_fit_index(offer, packing)
    }

    fn snapshot(&self) -> Option<AlgorithmSnapshot> {
        snapshot_of(self)
    }

    fn restore(&mut self, snapshot: &AlgorithmSnapshot) {
        restore_into(self, snapshot)
    }

    fn reset(&mut self) {}
}

/// Fullest bin that fits; ties go to the lowest index.
#[derive(Clone, Debug, Default)]
pub struct BestFit;

impl OnlineAlgorithm for BestFit {
    fn name(&self) -> String {
        "best-fit".into()
    }

    fn choose(&mut self, offer: &Offer<'_>, packing: &Packing) -> Result<usize, NumError> {
        let mut best: Option<usize> = None;
        for i in 0..packing.len() {
            if !packing.fits(i, offer)? {
                continue;
            }
            best = match best {
                Some(b) if compare_loads(packing, i, b)? != Ordering::Greater => Some(b),
                _ => Some(i),
            };
        }
        Ok(best.unwrap_or(packing.len()))
    }

    fn snapshot(&self) -> Option<AlgorithmSnapshot> {
        snapshot_of(self)
    }

    fn restore(&mut self, snapshot: &AlgorithmSnapshot) {
        restore_into(self, snapshot)
    }

    fn reset(&mut self) {}
}

/// Harmonic with `h` classes: an item in `(1/(i+1), 1/i]` for `i < h` goes
/// to a class-`i` bin holding `i` such items; items of size at most `1/h`
/// are packed next-fit into their own bins.
#[derive(Clone, Debug)]
pub struct Harmonic {
    h: usize,
    thresholds: Vec<LayeredValue>,
    /// For every class, the currently open bin and how many items it holds.
    open: Vec<Option<(usize, usize)>>,
}

impl Harmonic {
    pub fn new(h: usize) -> Result<Self, String> {
        if h < 3 {
            return Err(format!("harmonic needs at least 3 classes, got {h}"));
        }
        let thresholds = (1..=h).map(|i| LayeredValue::rational(rational::ratio(1, i as i64))).collect();
        Ok(Self {
            h,
            thresholds,
            open: vec![None; h + 1],
        })
    }

    /// Class `i` for sizes in `(1/(i+1), 1/i]`, `h` for sizes up to `1/h`.
    pub fn class_of(&self, offer: &Offer<'_>, ctx: &crate::Context) -> Result<usize, NumError> {
        for i in 1..self.h {
            if ctx.gt(offer.size, &self.thresholds[i])? {
                return Ok(i);
            }
        }
        Ok(self.h)
    }
}

impl OnlineAlgorithm for Harmonic {
    fn name(&self) -> String {
        format!("harmonic({})", self.h)
    }

    fn choose(&mut self, offer: &Offer<'_>, packing: &Packing) -> Result<usize, NumError> {
        let class = self.class_of(offer, packing.ctx())?;
        let fresh = packing.len();
        let slot = &mut self.open[class];
        let choice = match *slot {
            Some((bin, count)) if class < self.h && count < class => {
                *slot = Some((bin, count + 1));
                bin
            }
            Some((bin, count)) if class == self.h && packing.fits(bin, offer)? => {
                *slot = Some((bin, count + 1));
                bin
            }
            _ => {
                *slot = Some((fresh, 1));
                fresh
            }
        };
        Ok(choice)
    }

    fn snapshot(&self) -> Option<AlgorithmSnapshot> {
        snapshot_of(self)
    }

    fn restore(&mut self, snapshot: &AlgorithmSnapshot) {
        restore_into(self, snapshot)
    }

    fn reset(&mut self) {
        self.open = vec![None; self.h + 1];
    }
}

/// Every item opens a bin.
#[derive(Clone, Debug, Default)]
pub struct AlwaysNew;

impl OnlineAlgorithm for AlwaysNew {
    fn name(&self) -> String {
        "always-new".into()
    }

    fn choose(&mut self, _offer: &Offer<'_>, packing: &Packing) -> Result<usize, NumError> {
        Ok(packing.len())
    }

    fn snapshot(&self) -> Option<AlgorithmSnapshot> {
        snapshot_of(self)
    }

    fn restore(&mut self, snapshot: &AlgorithmSnapshot) {
        restore_into(self, snapshot)
    }

    fn reset(&mut self) {}
}

/// Uses a non-empty bin whenever one fits, scanning from the newest bin.
#[derive(Clone, Debug, Default)]
pub struct NeverEmpty;

impl OnlineAlgorithm for NeverEmpty {
    fn name(&self) -> String {
        "never-empty".into()
    }

    fn choose(&mut self, offer: &Offer<'_>, packing: &Packing) -> Result<usize, NumError> {
        for i in (0..packing.len()).rev() {
            if packing.fits(i, offer)? {
                return Ok(i);
            }
        }
        Ok(packing.len())
    }

    fn snapshot(&self) -> Option<AlgorithmSnapshot> {
        snapshot_of(self)
    }

    fn restore(&mut self, snapshot: &AlgorithmSnapshot) {
        restore_into(self, snapshot)
    }

    fn reset(&mut self) {}
}

/// Alternates between opening a new bin and first fit, item by item.
#[derive(Clone, Debug, Default)]
pub struct Alternating {
    step: u64,
}

impl OnlineAlgorithm for Alternating {
    fn name(&self) -> String {
        "alternating".into()
    }

    fn choose(&mut self, offer: &Offer<'_>, packing: &Packing) -> Result<usize, NumError> {
        self.step += 1;
        if self.step % 2 == 1 {
            Ok(packing.len())
        } else {
            first_fit_index(offer, packing)
        }
    }

    fn snapshot(&self) -> Option<AlgorithmSnapshot> {
        snapshot_of(self)
    }

    fn restore(&mut self, snapshot: &AlgorithmSnapshot) {
        restore_into(self, snapshot)
    }

    fn reset(&mut self) {
        self.step = 0;
    }
}

/// Pseudo-random but reproducible: opens a new bin with probability 1/3,
/// otherwise tries up to eight random bins and takes the first that fits.
#[derive(Clone, Debug)]
pub struct SeededRandom {
    seed: u64,
    rng: ChaCha8Rng,
}

impl SeededRandom {
    const PROBES: usize = 8;

    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl OnlineAlgorithm for SeededRandom {
    fn name(&self) -> String {
        format!("random({})", self.seed)
    }

    fn choose(&mut self, offer: &Offer<'_>, packing: &Packing) -> Result<usize, NumError> {
        let n = packing.len();
        if n == 0 || self.rng.gen_ratio(1, 3) {
            return Ok(n);
        }
        for _ in 0..Self::PROBES {
            let i = self.rng.gen_range(0..n);
            if packing.fits(i, offer)? {
                return Ok(i);
            }
        }
        Ok(n)
    }

    fn snapshot(&self) -> Option<AlgorithmSnapshot> {
        snapshot_of(self)
    }

    fn restore(&mut self, snapshot: &AlgorithmSnapshot) {
        restore_into(self, snapshot)
    }

    fn reset(&mut self) {
        self.rng = ChaCha8Rng::seed_from_u64(self.seed);
    }
}

/// Hides the wrapped algorithm's snapshot support, forcing the harness onto
/// its replay path.
pub struct ReplayOnly<A>(pub A);

impl<A: OnlineAlgorithm> OnlineAlgorithm for ReplayOnly<A> {
    fn name(&self) -> String {
        self.0.name()
    }

    fn choose(&mut self, offer: &Offer<'_>, packing: &Packing) -> Result<usize, NumError> {
        self.0.choose(offer, packing)
    }

    fn snapshot(&self) -> Option<AlgorithmSnapshot> {
        None
    }

    fn restore(&mut self, _snapshot: &AlgorithmSnapshot) {
        unreachable!("replay-only algorithms never hand out snapshots")
    }

    fn reset(&mut self) {
        self.0.reset()
    }
}

/// Names accepted by [`by_name`].
pub const NAMES: [&str; 8] = [
    "next-fit",
    "first-fit",
    "best-fit",
    "harmonic",
    "always-new",
    "never-empty",
    "alternating",
    "random",
];

/// Looks an algorithm up by its command-line name. `h` is used by
/// `harmonic`, `seed` by `random`.
pub fn by_name(name: &str, h: usize, seed: u64) -> Result<Box<dyn OnlineAlgorithm>, String> {
    Ok(match name {
        "next-fit" => Box::new(NextFit),
        "first-fit" => Box::new(FirstFit),
        "best-fit" => Box::new(BestFit),
        "harmonic" => Box::new(Harmonic::new(h)?),
        "always-new" => Box::new(AlwaysNew),
        "never-empty" => Box::new(NeverEmpty),
        "alternating" => Box::new(Alternating::default()),
        "random" => Box::new(SeededRandom::new(seed)),
        other => {
            return Err(format!("unknown algorithm {other:?}; expected one of {}", NAMES.join(", ")));
        }
    })
}

/// Feeds `sizes` to `alg` on a fresh packing and returns the final packing.
pub fn pack_sequence(
    alg: &mut dyn OnlineAlgorithm,
    ctx: &crate::Context,
    sizes: &[LayeredValue],
) -> Result<Packing, crate::packing::PackingError> {
    let mut packing = Packing::new(ctx.clone());
    for (id, size) in sizes.iter().enumerate() {
        let item = crate::packing::Item::new(ctx, id, crate::packing::Batch::A, size.clone())?;
        let choice = alg.choose(&item.offer(), &packing)?;
        packing.place(&item, choice)?;
    }
    Ok(packing)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;
    use crate::Context;

    fn ctx() -> Context {
        Context::from_u64(1000).unwrap()
    }

    fn sizes(xs: &[(i64, i64)]) -> Vec<LayeredValue> {
        xs.iter().map(|&(n, d)| LayeredValue::rational(ratio(n, d))).collect()
    }

    fn contents(p: &Packing) -> Vec<Vec<usize>> {
        p.bins().iter().map(|b| b.contents.clone()).collect()
    }

    #[test]
    fn next_fit_examples() {
        let ctx = ctx();
        let p = pack_sequence(&mut NextFit, &ctx, &sizes(&[(3, 5), (3, 5), (3, 5)])).unwrap();
        assert_eq!(p.len(), 3);
        let p = pack_sequence(&mut NextFit, &ctx, &sizes(&[(3, 10), (3, 10), (3, 5), (3, 10)])).unwrap();
        assert_eq!(contents(&p), vec![vec![0, 1], vec![2, 3]]);
    }

    #[test]
    fn first_fit_examples() {
        let ctx = ctx();
        let p = pack_sequence(&mut FirstFit, &ctx, &sizes(&[(3, 5), (3, 10), (3, 5), (3, 10)])).unwrap();
        assert_eq!(contents(&p), vec![vec![0, 1], vec![2, 3]]);
        let p = pack_sequence(&mut FirstFit, &ctx, &sizes(&[(1, 2), (1, 2), (1, 2)])).unwrap();
        assert_eq!(p.len(), 2);
    }

    #[test]
    fn best_fit_examples() {
        let ctx = ctx();
        let p = pack_sequence(&mut BestFit, &ctx, &sizes(&[(3, 10), (4, 5), (1, 2), (2, 5)])).unwrap();
        // 0.3 -> bin 0, 0.8 -> bin 1, 0.5 -> bin 0 (fuller fit), 0.4 -> new bin.
        assert_eq!(p.len(), 3);

        // Loads 0.3 and 0.5, item 0.4: joins the 0.5 bin.
        let p = pack_sequence(&mut AlwaysNew, &ctx, &sizes(&[(3, 10), (1, 2)])).unwrap();
        let x = LayeredValue::rational(ratio(2, 5));
        assert_eq!(BestFit.choose(&Offer::new(&ctx, &x), &p).unwrap(), 1);

        // Loads 0.5 and 0.5, item 0.4: lowest index wins the tie.
        let p = pack_sequence(&mut AlwaysNew, &ctx, &sizes(&[(1, 2), (1, 2)])).unwrap();
        assert_eq!(BestFit.choose(&Offer::new(&ctx, &x), &p).unwrap(), 0);

        // Item 0.9 with loads 0.3 and 0.5: new bin.
        let p = pack_sequence(&mut AlwaysNew, &ctx, &sizes(&[(3, 10), (1, 2)])).unwrap();
        let big = LayeredValue::rational(ratio(9, 10));
        assert_eq!(BestFit.choose(&Offer::new(&ctx, &big), &p).unwrap(), 2);
    }

    #[test]
    fn harmonic_examples() {
        let ctx = ctx();
        let p = pack_sequence(&mut Harmonic::new(3).unwrap(), &ctx, &sizes(&[(3, 5), (3, 5)])).unwrap();
        assert_eq!(p.len(), 2);
        let p = pack_sequence(&mut Harmonic::new(3).unwrap(), &ctx, &sizes(&[(2, 5); 3])).unwrap();
        assert_eq!(contents(&p), vec![vec![0, 1], vec![2]]);
        // Ten items of 1/5 in the small class, next fit: five fill a bin exactly.
        let p = pack_sequence(&mut Harmonic::new(3).unwrap(), &ctx, &sizes(&[(1, 5); 10])).unwrap();
        assert_eq!(contents(&p), vec![vec![0, 1, 2, 3, 4], vec![5, 6, 7, 8, 9]]);
        // Slightly above 1/5: four per bin.
        let p = pack_sequence(&mut Harmonic::new(3).unwrap(), &ctx, &sizes(&[(21, 100); 10])).unwrap();
        assert_eq!(p.bins().iter().map(|b| b.contents.len()).collect::<Vec<_>>(), vec![4, 4, 2]);
    }

    #[test]
    fn harmonic_class_boundaries_are_exact() {
        let ctx = ctx();
        let h = Harmonic::new(7).unwrap();
        let class = |n, d| {
            let v = LayeredValue::rational(ratio(n, d));
            h.class_of(&Offer::new(&ctx, &v), &ctx).unwrap()
        };
        assert_eq!(class(1, 1), 1);
        assert_eq!(class(1, 2), 2);
        assert_eq!(class(1, 3), 3);
        assert_eq!(class(1, 6), 6);
        assert_eq!(class(1, 7), 7);
        assert_eq!(class(1, 100), 7);
        let e = num_bigint::BigUint::from(1u32) << 2000u32;
        let just_above = LayeredValue::new(ratio(1, 7), [(e, ratio(1, 7))]);
        assert_eq!(h.class_of(&Offer::new(&ctx, &just_above), &ctx).unwrap(), 6);
        assert!(Harmonic::new(2).is_err());
    }

    #[test]
    fn lookup_by_name() {
        for name in NAMES {
            let alg = by_name(name, 7, 1).unwrap();
            assert!(!alg.name().is_empty());
        }
        assert!(by_name("worst-fit", 7, 0).is_err());
        assert!(by_name("harmonic", 2, 0).is_err());
    }

    #[test]
    fn snapshot_restore_round_trip() {
        let ctx = ctx();
        let items = sizes(&[(1, 3), (1, 4), (2, 3), (1, 5), (1, 2), (1, 7), (3, 8), (1, 9), (2, 7), (1, 3)]);
        let algs: Vec<fn() -> Box<dyn OnlineAlgorithm>> = vec![
            || Box::new(NextFit),
            || Box::new(FirstFit),
            || Box::new(BestFit),
            || Box::new(Harmonic::new(4).unwrap()),
            || Box::new(Alternating::default()),
            || Box::new(SeededRandom::new(9)),
        ];
        for make in algs {
            let full = pack_sequence(make().as_mut(), &ctx, &items).unwrap();

            let mut alg = make();
            let mut packing = Packing::new(ctx.clone());
            for (id, size) in items.iter().enumerate() {
                if id == 4 {
                    let (snap, saved) = (alg.snapshot().unwrap(), packing.clone());
                    // Play a throwaway continuation before restoring.
                    let junk = crate::packing::Item::new(&ctx, 99, crate::packing::Batch::A, size.clone()).unwrap();
                    let c = alg.choose(&junk.offer(), &packing).unwrap();
                    packing.place(&junk, c).unwrap();
                    alg.restore(&snap);
                    packing = saved;
                }
                let item = crate::packing::Item::new(&ctx, id, crate::packing::Batch::A, size.clone()).unwrap();
                let c = alg.choose(&item.offer(), &packing).unwrap();
                packing.place(&item, c).unwrap();
            }
            assert_eq!(contents(&packing), contents(&full), "{}", alg.name());
        }
    }
}
