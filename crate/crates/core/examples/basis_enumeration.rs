//! Enumerates a two-excitation basis, its sectors and hop structure.
//!
//! cargo run --example basis_enumeration -- [N] [M]

use chiral_array::basis::{classify_pair, enumerate_basis, ExcitationTuple, HopClassification};

fn main() -> chiral_array::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>());
    let n = args.next().transpose().ok().flatten().unwrap_or(5);
    let m = args.next().transpose().ok().flatten().unwrap_or(2);
    let basis = enumerate_basis(n, m)?;
    println!("N = {n}, M = {m}: {} states in {} sectors", basis.dim(), basis.n_sectors());

    for k in 1..=basis.n_sectors() {
        let states: Vec<String> = basis.sector_range(k).map(|i| basis.state(i).to_string()).collect();
        println!("  sector {k:>2}: {}", states.join(" "));
    }

    let probe = ExcitationTuple::new(vec![2, 3].into_iter().take(m).collect(), n)?;
    println!("index_of{probe} = {}", basis.index_of(&probe)?);

    // how many states each state couples to by one hop
    let first = basis.state(0);
    let hops = basis
        .states()
        .iter()
        .filter(|q| matches!(classify_pair(first, q), Ok(HopClassification::SingleHop { .. })))
        .count();
    println!("{first} is one hop away from {hops} states (M (N - M) = {})", m * (n - m));
    Ok(())
}
