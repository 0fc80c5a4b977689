//! Fixtures shared by the benchmarks.

use edgecache::env::{two_point_model, CatalogFile};
use edgecache::learning::{NextSlot, QEstimate};
use edgecache::planning::FileModel;
use edgecache::pricing::FileSlot;
use edgecache::rng::stream;
use edgecache::{PriceSample, SlotState};

/// A four-point model with a moderate discount.
pub fn model(discount: f64) -> FileModel {
    let store = edgecache::env::PriceModel::uniform(&[1.0, 2.0, 4.0, 9.0]).unwrap();
    let fetch = edgecache::env::PriceModel::uniform(&[20.0, 30.0, 45.0, 70.0]).unwrap();
    FileModel::new(0.4, store, fetch, discount).unwrap()
}

/// `files` slot inputs with sizes in [1, 100) and fresh tables.
pub fn mq_fixture(files: usize) -> (Vec<QEstimate>, Vec<FileSlot>) {
    use rand::Rng;
    let mut rng = stream(1, &[files as u64]);
    let slots = (0..files)
        .map(|_| {
            let size = rng.random_range(1.0..100.0);
            let file = CatalogFile::new(
                0,
                size,
                rng.random(),
                two_point_model(2.0 * size, 0.2 * size).unwrap(),
                two_point_model(44.0 * size, 4.4 * size).unwrap(),
            )
            .unwrap();
            let (r, p) = edgecache::env::sample_slot(&file, &mut rng);
            let (nr, np) = edgecache::env::sample_slot(&file, &mut rng);
            FileSlot {
                state: SlotState::new(r, rng.random()),
                prices: p,
                next: NextSlot { request: nr, prices: np },
                size,
            }
        })
        .collect();
    (vec![QEstimate::new(0.3).unwrap(); files], slots)
}

pub fn prices() -> (PriceSample, NextSlot) {
    (PriceSample::new(2.0, 44.0), NextSlot { request: true, prices: PriceSample::new(2.2, 40.0) })
}
