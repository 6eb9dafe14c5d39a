use gigastore::degrade::*;
use gigastore::layout::{build_layout, render_mask, LayoutParams, MaskBitmap};
use gigastore::optics::{IndexTable, MediumDesign, StackPair};
use gigastore::retention::{kelvin_to_joules, BOLTZMANN};
use proptest::prelude::*;

const HOUR: f64 = 3600.0;

fn stacks() -> StackPair {
    MediumDesign::default().stacks(&IndexTable::bundled()).unwrap()
}

fn disk() -> MaskBitmap {
    let docs: Vec<Vec<u8>> = (0..64).map(|i| format!("record {i:02}").into_bytes()).collect();
    render_mask(&build_layout(b"ARCHIVE INDEX", &docs, &LayoutParams::default()).unwrap())
}

#[test]
fn same_seed_same_image_regardless_of_threads() {
    let mask = disk();
    let s = stacks();
    let scenario = DamageScenario::isothermal(950.0, HOUR, 42);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| age_disk(&mask, &s, &scenario).unwrap())
    };
    let serial = run(1);
    let parallel = run(4);
    assert_eq!(serial.to_pgm(), parallel.to_pgm());
    assert_eq!(serial.stats, parallel.stats);
    assert!(serial.stats.cracks > 0 && serial.stats.whisker_pixels > 0);
    let other = age_disk(&mask, &s, &DamageScenario::isothermal(950.0, HOUR, 43)).unwrap();
    assert_ne!(other.pixels, serial.pixels);
}

#[test]
fn expected_flips_is_probability_times_count() {
    let mut mask = MaskBitmap::new(1000, 1000, 1e-6);
    for r in 0..1000 {
        for c in 0..1000 {
            mask.set(r, c, true);
        }
    }
    // Barrier chosen so that one hour at 400 K loses one bit in a million.
    let t = 400.0;
    let hazard = -(-1e-6f64).ln_1p();
    let barrier = BOLTZMANN * t * (1e9 * HOUR / hazard).ln();
    let scenario = DamageScenario {
        bit_barrier: barrier,
        ..DamageScenario::isothermal(t, HOUR, 0)
    };
    assert!((scenario.flip_probability().unwrap() - 1e-6).abs() < 1e-15);
    assert!((expected_flip_count(&mask, &scenario).unwrap() - 1.0).abs() < 1e-8);
    assert_eq!(
        expected_flip_count(&MaskBitmap::new(50, 50, 1e-6), &scenario).unwrap(),
        0.0
    );
}

#[test]
fn sampled_flips_agree_with_expectation() {
    let mask = disk();
    let s = stacks();
    let n = mask.tungsten_count() as f64;
    let mut total = 0.0;
    let mut p = 0.0;
    for seed in 0..100 {
        let scenario = DamageScenario {
            crack_density: 0.0,
            ..DamageScenario::isothermal(600.0, HOUR, seed)
        };
        p = scenario.flip_probability().unwrap();
        total += age_disk(&mask, &s, &scenario).unwrap().stats.flipped_bits as f64;
    }
    let mean = 100.0 * n * p;
    let sigma = (100.0 * n * p * (1.0 - p)).sqrt();
    assert!((total - mean).abs() < 4.0 * sigma, "{total} vs {mean} ± {sigma}");
}

#[test]
fn crack_count_scales_with_density() {
    let mask = disk();
    let area_mm2 = (mask.width as f64 * mask.pitch * 1e3).powi(2);
    let count = |density: f64| -> f64 {
        (0..100u64)
            .map(|seed| {
                let scenario = DamageScenario {
                    crack_density: density,
                    ..DamageScenario::isothermal(650.0, HOUR, seed)
                };
                sample_cracks(&scenario, mask.width, mask.height, mask.pitch).len() as f64
            })
            .sum::<f64>()
            / 100.0
    };
    let base = count(5.0);
    let double = count(10.0);
    let expected = DamageScenario {
        crack_density: 5.0,
        ..DamageScenario::isothermal(650.0, HOUR, 0)
    }
    .expected_cracks(area_mm2);
    assert!((base / expected - 1.0).abs() < 0.1, "{base} vs {expected}");
    assert!((double / (2.0 * expected) - 1.0).abs() < 0.1, "{double} vs {}", 2.0 * expected);
}

#[test]
fn aging_stats_count_the_sampled_cracks() {
    let mask = disk();
    let scenario = DamageScenario::isothermal(650.0, HOUR, 8);
    let image = age_disk(&mask, &stacks(), &scenario).unwrap();
    let cracks = sample_cracks(&scenario, mask.width, mask.height, mask.pitch);
    assert_eq!(image.stats.cracks, cracks.len());
    assert_eq!(
        image.stats.cracked_pixels,
        crack_footprint(&cracks, scenario.crack_radius, mask.width, mask.height).len()
    );
}

#[test]
fn cracks_only_change_cracked_pixels() {
    let mask = disk();
    let s = stacks();
    let flat = DamageScenario {
        thickness_spread: 0.0,
        ..DamageScenario::isothermal(620.0, HOUR, 5)
    };
    let rough = DamageScenario {
        thickness_spread: 0.2,
        ..flat.clone()
    };
    let a = age_disk(&mask, &s, &flat).unwrap();
    let b = age_disk(&mask, &s, &rough).unwrap();
    let cracks = sample_cracks(&rough, mask.width, mask.height, mask.pitch);
    let footprint = crack_footprint(&cracks, rough.crack_radius, mask.width, mask.height);
    assert!(!footprint.is_empty());
    let mut changed = 0;
    for i in 0..a.pixels.len() {
        if a.pixels[i] != b.pixels[i] {
            assert!(footprint.contains(&i));
            changed += 1;
        }
    }
    assert!(changed > footprint.len() / 2);
}

#[test]
fn mild_bake_leaves_disk_untouched() {
    let mask = disk();
    let s = stacks();
    let pristine = render_pristine(&mask, &s);
    let mut flips = 0;
    for seed in 0..100 {
        let scenario = DamageScenario::isothermal(473.0, HOUR, seed);
        assert!(scenario.flip_probability().unwrap() < 1e-6);
        let image = age_disk(&mask, &s, &scenario).unwrap();
        assert_eq!(image.stats.cracks, 0);
        flips += image.stats.flipped_bits;
        if image.stats.flipped_bits == 0 {
            assert_eq!(image.pixels, pristine.pixels);
        }
    }
    assert!(flips <= 5, "{flips}");
    let seed42 = age_disk(&mask, &s, &DamageScenario::isothermal(473.0, HOUR, 42)).unwrap();
    assert_eq!(seed42.pixels, pristine.pixels);
}

#[test]
fn damage_channels_switch_on_at_their_thresholds() {
    let mask = disk();
    let s = stacks();
    let cool = age_disk(&mask, &s, &DamageScenario::isothermal(480.0, HOUR, 1)).unwrap();
    assert_eq!((cool.stats.cracks, cool.stats.whisker_pixels), (0, 0));
    let whiskers = age_disk(&mask, &s, &DamageScenario::isothermal(923.0, HOUR, 1)).unwrap();
    let fraction = whiskers.stats.whisker_pixels as f64 / whiskers.pixels.len() as f64;
    assert!((fraction - 0.01).abs() < 0.001, "{fraction}");
    assert!(!whiskers.stats.destroyed);
    let gone = age_disk(&mask, &s, &DamageScenario::isothermal(1373.0, 4.0 * HOUR, 1)).unwrap();
    assert!(gone.stats.destroyed);
    assert_eq!((gone.width, gone.height), (mask.width, mask.height));
}

#[test]
fn disabled_channels_reproduce_pristine_render() {
    let mask = disk();
    let s = stacks();
    let pristine = render_pristine(&mask, &s);
    let quiet = DamageScenario {
        bit_barrier: kelvin_to_joules(1000.0, 300.0),
        crack_density: 0.0,
        ..DamageScenario::isothermal(900.0, 10.0 * HOUR, 3)
    };
    assert_eq!(age_disk(&mask, &s, &quiet).unwrap().pixels, pristine.pixels);
    let empty = DamageScenario::default();
    assert_eq!(age_disk(&mask, &s, &empty).unwrap().pixels, pristine.pixels);
}

#[test]
fn scenario_json_round_trip_and_defaults() {
    let s = DamageScenario::isothermal(613.0, HOUR, 9);
    assert_eq!(DamageScenario::from_json(&s.to_json()).unwrap(), s);
    let partial = DamageScenario::from_json(
        r#"{"schedule":[{"temperature":513,"duration":3600}],"seed":4}"#,
    )
    .unwrap();
    assert_eq!(partial.crack_density, DamageScenario::default().crack_density);
    assert_eq!(partial.seed, 4);
    assert!(DamageScenario::from_json(r#"{"schedule":[{"temperature":-1,"duration":1}]}"#).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn hotter_never_means_fewer_expected_flips(
        temps in proptest::collection::vec(250.0f64..1200.0, 1..4),
        hours in proptest::collection::vec(0.0f64..100.0, 4),
        which in 0usize..4,
        bump in 0.0f64..300.0,
        barrier_kt in 20.0f64..120.0,
    ) {
        let mask = MaskBitmap::new(0, 0, 1e-6);
        let mut m = MaskBitmap::new(10, 10, 1e-6);
        m.set(3, 3, true);
        let schedule: Vec<Segment> = temps.iter().zip(&hours)
            .map(|(&temperature, &h)| Segment { temperature, duration: h * HOUR })
            .collect();
        let base = DamageScenario {
            schedule,
            bit_barrier: kelvin_to_joules(barrier_kt, 300.0),
            destruction_temp: 5000.0,
            whisker_temp: 4000.0,
            ..DamageScenario::default()
        };
        let mut hot = base.clone();
        let i = which % hot.schedule.len();
        hot.schedule[i].temperature += bump;
        prop_assert!(expected_flip_count(&m, &hot).unwrap() >= expected_flip_count(&m, &base).unwrap());
        prop_assert_eq!(expected_flip_count(&mask, &hot).unwrap(), 0.0);
    }
}
