use pec::cluster::select_n;
use pec::synth::blobs;

#[test]
fn three_blobs_select_three() {
    let (f, _) = blobs(3, 30, 2, 0.3, 8.0, 1).unwrap();
    let s = select_n(f.values(), &[2, 3, 4, 5, 6], 0, 10).unwrap();
    assert_eq!(s.recommended, 3);
}

#[test]
fn four_blobs_select_four_on_most_seeds() {
    let hits = (0..5)
        .filter(|&seed| {
            let (f, _) = blobs(4, 25, 3, 0.4, 6.0, seed).unwrap();
            select_n(f.values(), &[2, 3, 4, 5, 6], seed, 10)
                .unwrap()
                .recommended
                == 4
        })
        .count();
    assert!(hits >= 4, "{hits} of 5");
}

#[test]
fn select_single_candidate() {
    let (f, _) = blobs(3, 10, 2, 0.3, 8.0, 2).unwrap();
    let s = select_n(f.values(), &[2], 0, 5).unwrap();
    assert_eq!(s.recommended, 2);
    assert_eq!(s.table.len(), 1);
}
