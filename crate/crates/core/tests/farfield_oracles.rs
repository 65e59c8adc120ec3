mod common;

use h1cav::farfield::{overlap_k, Aperture, OverlapConvention};

#[test]
fn overlap_of_gaussians_matches_quadrature() {
    // widths σ and 2σ: K = (∫√(I_H I_V))² / (∫I_H ∫I_V) = 16/25, and the
    // same for √I; σ is small enough that the wider √I tail is below 1e-8
    // at the NA 0.7 edge
    let sigma = 0.04;
    let h = common::map_with_intensity(100, 0.01, common::gaussian_intensity(sigma));
    let v = common::map_with_intensity(100, 0.01, common::gaussian_intensity(2.0 * sigma));
    let aperture = Aperture::new(0.7).unwrap();
    for convention in [OverlapConvention::Intensity, OverlapConvention::Amplitude] {
        let k = overlap_k(&h, &v, aperture, convention).unwrap();
        assert!((k - 0.64).abs() < 1e-6, "{convention:?}: K = {k}");
    }
    let same = overlap_k(&h, &h, aperture, OverlapConvention::Intensity).unwrap();
    assert!((same - 1.0).abs() < 1e-12);
}

#[test]
fn gaussian_near_field_spreads_at_the_diffraction_angle() {
    for (waist, lambda) in [(20.0, 40.0), (30.0, 50.0)] {
        let err = common::gaussian_width_error(waist, lambda);
        assert!(err < 0.02, "waist {waist}, λ {lambda}: relative error {err}");
    }
}
