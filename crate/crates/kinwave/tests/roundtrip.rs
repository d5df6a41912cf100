use kinwave::examples::{example_shock, example_solitary};
use kinwave::output::{profile_csv, read_profile_csv};
use kinwave::profile::{ProfileSettings, WaveProfile};
use kinwave::PlasmaParams;

fn columns(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with('X'))
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect()
}

fn check(p: &WaveProfile) {
    let text = profile_csv(p);
    let (x, phi) = read_profile_csv(&text).unwrap();
    assert_eq!(x, p.x);
    assert_eq!(phi, p.phi);
    let mut worst: f64 = 0.0;
    for row in columns(&text) {
        let (dphi, v) = (row[2], row[3]);
        worst = worst.max((dphi * dphi - 2.0 * v).abs() / (2.0 * v).abs().max(1.0));
    }
    assert!(worst < 1e-8, "{worst}");
}

#[test]
fn profile_csv_round_trip() {
    let s = ProfileSettings::default();
    let unit = PlasmaParams::unit(0.0);
    check(&example_solitary(&unit).unwrap().profile(&s).unwrap());
    check(&example_shock(1.0, &unit).unwrap().profile(&s).unwrap());
}
