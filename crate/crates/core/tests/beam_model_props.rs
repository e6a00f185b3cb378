//! Matched-gain and symmetry properties over random geometries.

use rand::Rng;
use rand_pcg::Pcg64Mcg;
use std::f64::consts::PI;
use thinarray_core::array_gen::ArrayGeometry;
use thinarray_core::beam_model::{
    array_factor_power, array_gain_db, conjugate_weights, Direction,
};

fn random_geometry(rng: &mut Pcg64Mcg, n: usize) -> ArrayGeometry {
    ArrayGeometry {
        elements: (0..n)
            .map(|_| (rng.gen::<f64>() * 10.0 - 5.0, rng.gen::<f64>() * 10.0 - 5.0))
            .collect(),
    }
}

fn random_direction(rng: &mut Pcg64Mcg) -> Direction {
    Direction::new(rng.gen::<f64>() * 1.99 * PI - PI + 1e-9, rng.gen::<f64>() * PI).unwrap()
}

#[test]
fn matched_gain_equals_element_count() {
    let mut rng = <Pcg64Mcg as rand::SeedableRng>::seed_from_u64(31);
    for _ in 0..100 {
        let n = rng.gen_range(1..=128);
        let geom = random_geometry(&mut rng, n);
        let target = random_direction(&mut rng);
        let w = conjugate_weights(&geom, &target).unwrap();
        let p = array_factor_power(&geom, &w, &target).unwrap();
        assert!(
            (p - n as f64).abs() <= n as f64 * 1e-9,
            "matched power {p} for {n} elements"
        );
    }
}

#[test]
fn array_factor_never_exceeds_element_count() {
    let mut rng = <Pcg64Mcg as rand::SeedableRng>::seed_from_u64(32);
    for _ in 0..50 {
        let n = rng.gen_range(1..=64);
        let geom = random_geometry(&mut rng, n);
        let w = conjugate_weights(&geom, &random_direction(&mut rng)).unwrap();
        for _ in 0..20 {
            let p = array_factor_power(&geom, &w, &random_direction(&mut rng)).unwrap();
            assert!(p <= n as f64 * (1.0 + 1e-9), "power {p} above bound {n}");
        }
    }
}

#[test]
fn mirror_symmetric_geometry_has_symmetric_pattern() {
    // Quadrant-mirrored point set, broadside steering: the pattern must be
    // even in azimuth and in elevation about the horizon.
    let mut rng = <Pcg64Mcg as rand::SeedableRng>::seed_from_u64(33);
    let mut elements = Vec::new();
    for _ in 0..12 {
        let y = rng.gen::<f64>() * 4.0 + 0.1;
        let z = rng.gen::<f64>() * 4.0 + 0.1;
        elements.extend_from_slice(&[(y, z), (-y, z), (y, -z), (-y, -z)]);
    }
    let geom = ArrayGeometry { elements };
    let w = conjugate_weights(&geom, &Direction::boresight()).unwrap();
    for _ in 0..200 {
        let zenith = rng.gen::<f64>() * PI;
        let azimuth = rng.gen::<f64>() * (PI - 1e-9);
        let base = array_gain_db(&geom, &w, &Direction::new(azimuth, zenith).unwrap()).unwrap();
        let flipped_az =
            array_gain_db(&geom, &w, &Direction::new(-azimuth, zenith).unwrap()).unwrap();
        let flipped_el =
            array_gain_db(&geom, &w, &Direction::new(azimuth, PI - zenith).unwrap()).unwrap();
        assert!((base - flipped_az).abs() < 1e-9, "{base} vs {flipped_az}");
        assert!((base - flipped_el).abs() < 1e-9, "{base} vs {flipped_el}");
    }
}

#[test]
fn thinning_never_raises_peak_matched_gain() {
    let mut rng = <Pcg64Mcg as rand::SeedableRng>::seed_from_u64(34);
    let geom = random_geometry(&mut rng, 64);
    let target = random_direction(&mut rng);
    let mut last = f64::INFINITY;
    for keep in [64usize, 48, 32, 16, 4, 1] {
        let thinned = ArrayGeometry {
            elements: geom.elements[..keep].to_vec(),
        };
        let w = conjugate_weights(&thinned, &target).unwrap();
        let peak = array_gain_db(&thinned, &w, &target).unwrap();
        assert!(peak <= last + 1e-12, "peak rose to {peak} with {keep} elements");
        last = peak;
    }
}
