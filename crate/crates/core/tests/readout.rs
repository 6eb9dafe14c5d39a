use gigastore::degrade::*;
use gigastore::layout::{build_layout, render_mask, DiskLayout, LayoutParams, MaskBitmap};
use gigastore::optics::{IndexTable, MediumDesign, StackPair};
use gigastore::qrcodec::symbol::{finder_origins, FINDER_SIZE};
use gigastore::readout::*;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

const HOUR: f64 = 3600.0;

struct Disk {
    layout: DiskLayout,
    mask: MaskBitmap,
    stacks: StackPair,
    levels: GrayLevels,
}

fn disk() -> Disk {
    let docs: Vec<Vec<u8>> = (0..64).map(|i| format!("record {i:02}").into_bytes()).collect();
    let layout = build_layout(b"ARCHIVE INDEX", &docs, &LayoutParams::default()).unwrap();
    let mask = render_mask(&layout);
    let stacks = MediumDesign::default().stacks(&IndexTable::bundled()).unwrap();
    let levels = GrayLevels::of(&stacks);
    Disk {
        layout,
        mask,
        stacks,
        levels,
    }
}

fn options(d: &Disk, mode: ReadMode, seed: u64) -> ReadOptions {
    let mut o = ReadOptions::new(d.levels, mode);
    o.classify.seed = seed;
    o
}

fn aged(d: &Disk, temperature: f64, hours: f64, seed: u64) -> AgedDiskImage {
    age_disk(&d.mask, &d.stacks, &DamageScenario::isothermal(temperature, hours * HOUR, seed)).unwrap()
}

#[test]
fn pristine_disk_reads_back_exactly() {
    let d = disk();
    let image = render_pristine(&d.mask, &d.stacks);
    let manifest = d.layout.manifest();
    for mode in [ReadMode::Monochromatic, ReadMode::Whitelight] {
        let c = classify(&image, &manifest.geometry(), &ClassifyOptions::new(d.levels, mode)).unwrap();
        assert_eq!(c.dark, d.mask.bits());
        assert!(c.erased.iter().all(|&e| !e));
        let report = read_disk(&image, &manifest, &options(&d, mode, 0)).unwrap();
        assert_eq!(report.decoded, report.total_inner);
        assert_eq!(report.total_inner, d.layout.slots.len());
        assert_eq!(report.alpha_observed, 0.0);
        assert!(report.passed);
    }
}

#[test]
fn flipped_pixels_are_local() {
    let d = disk();
    let manifest = d.layout.manifest();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for k in [1usize, 5, 40] {
        let mut image = render_pristine(&d.mask, &d.stacks);
        let mut chosen = std::collections::BTreeSet::new();
        while chosen.len() < k {
            chosen.insert((rng.next_u64() as usize) % image.pixels.len());
        }
        for &i in &chosen {
            image.pixels[i] = if d.mask.bits()[i] { d.levels.bare } else { d.levels.metal };
        }
        let c = classify(&image, &manifest.geometry(), &ClassifyOptions::new(d.levels, ReadMode::Monochromatic)).unwrap();
        let differing = c.dark.iter().zip(d.mask.bits()).filter(|(a, b)| a != b).count();
        assert_eq!(differing, k);
        let report = read_disk(&image, &manifest, &options(&d, ReadMode::Monochromatic, 0)).unwrap();
        assert!(report.alpha_observed > 0.0);
        assert!(!report.passed);
    }
}

#[test]
fn whitelight_never_beats_monochromatic_on_average() {
    let d = disk();
    let manifest = d.layout.manifest();
    let (mut mono, mut white) = (0usize, 0usize);
    for seed in 0..100 {
        let image = aged(&d, 563.0, 1.0, seed);
        mono += read_disk(&image, &manifest, &options(&d, ReadMode::Monochromatic, seed)).unwrap().decoded;
        white += read_disk(&image, &manifest, &options(&d, ReadMode::Whitelight, seed)).unwrap().decoded;
    }
    assert!(white <= mono, "whitelight {white} > monochromatic {mono}");
}

#[test]
fn finder_repair_only_adds_symbols() {
    let d = disk();
    let manifest = d.layout.manifest();
    for seed in 0..10 {
        let image = aged(&d, 600.0 + 10.0 * seed as f64, 1.0, seed);
        let plain = read_disk(&image, &manifest, &options(&d, ReadMode::Whitelight, seed)).unwrap();
        let mut o = options(&d, ReadMode::Whitelight, seed);
        o.repair_finders = true;
        let repaired = read_disk(&image, &manifest, &o).unwrap();
        assert_eq!(plain.decoded, plain.decoded_after_repair);
        assert_eq!(repaired.decoded, plain.decoded);
        assert!(repaired.decoded_after_repair >= plain.decoded);
        assert!(repaired.decoded <= repaired.decoded_after_repair);
        assert!(repaired.decoded_after_repair <= repaired.total_inner);
        assert!((0.0..=1.0).contains(&repaired.alpha_observed));
    }
}

#[test]
fn destroyed_finders_need_repair() {
    let d = disk();
    let manifest = d.layout.manifest();
    let g = manifest.geometry();
    let mut image = render_pristine(&d.mask, &d.stacks);
    for slot in &d.layout.slots {
        let (r0, c0) = g.module_origin(slot.row, slot.col);
        for (fr, fc) in finder_origins(g.inner_side) {
            for i in 0..FINDER_SIZE {
                for j in 0..FINDER_SIZE {
                    image.pixels[(r0 + fr + i) * image.width + c0 + fc + j] = d.levels.bare;
                }
            }
        }
    }
    let plain = read_disk(&image, &manifest, &options(&d, ReadMode::Monochromatic, 0)).unwrap();
    assert_eq!(plain.decoded_after_repair, 0);
    assert!(plain.per_symbol.iter().all(|s| s.finder == [false; 3]));
    let mut o = options(&d, ReadMode::Monochromatic, 0);
    o.repair_finders = true;
    let repaired = read_disk(&image, &manifest, &o).unwrap();
    assert_eq!(repaired.decoded, 0);
    assert_eq!(repaired.decoded_after_repair, repaired.total_inner);
    assert!(repaired.per_symbol.iter().all(|s| s.status == SymbolStatus::Repaired));
}

#[test]
fn mild_bake_passes_and_destruction_fails() {
    let d = disk();
    let manifest = d.layout.manifest();
    let mild = read_disk(&aged(&d, 473.0, 1.0, 42), &manifest, &options(&d, ReadMode::Monochromatic, 42)).unwrap();
    assert_eq!(mild.decoded, mild.total_inner);
    assert_eq!(mild.alpha_observed, 0.0);
    assert!(mild.passed);
    let gone = read_disk(&aged(&d, 1373.0, 4.0, 42), &manifest, &options(&d, ReadMode::Monochromatic, 42)).unwrap();
    assert_eq!(gone.decoded_after_repair, 0);
    assert!(!gone.passed);
}

#[test]
fn readable_count_falls_with_temperature() {
    let d = disk();
    let manifest = d.layout.manifest();
    let median = |t: f64| {
        let mut counts: Vec<usize> = (0..21)
            .map(|seed| {
                read_disk(&aged(&d, t, 1.0, seed), &manifest, &options(&d, ReadMode::Whitelight, seed))
                    .unwrap()
                    .decoded
            })
            .collect();
        counts.sort_unstable();
        counts[10]
    };
    let (a, b, c) = (median(513.0), median(613.0), median(713.0));
    assert!(a >= b && b >= c, "{a} {b} {c}");
    assert!(a > c);
}

#[test]
fn report_json_round_trips_byte_for_byte() {
    let d = disk();
    let manifest = d.layout.manifest();
    let report = read_disk(&aged(&d, 640.0, 1.0, 3), &manifest, &options(&d, ReadMode::Whitelight, 3)).unwrap();
    let text = report.to_json();
    assert_eq!(ReadoutReport::from_json(&text).unwrap().to_json(), text);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    for key in ["totalInner", "decoded", "decodedAfterRepair", "alphaObserved", "alphaTarget", "passed", "perSymbol"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    let first = &v["perSymbol"][0];
    for key in ["index", "status", "corrected", "erasures", "finder"] {
        assert!(first.get(key).is_some(), "{key}");
    }
}

#[test]
fn mismatched_inputs_are_rejected() {
    let d = disk();
    let manifest = d.layout.manifest();
    let small = MaskBitmap::new(100, 100, 2e-6);
    let image = render_pristine(&small, &d.stacks);
    assert!(read_disk(&image, &manifest, &options(&d, ReadMode::Monochromatic, 0)).is_err());
    let mut unlabeled = render_pristine(&small, &d.stacks);
    unlabeled.provenance = Provenance::default();
    assert!(matches!(
        read_disk(&unlabeled, &manifest, &options(&d, ReadMode::Monochromatic, 0)),
        Err(ReadoutError::Layout(_))
    ));
}
