use kamtori::classify::{classify, reconstruct};
use kamtori::coeff::{C64, Coeff};
use kamtori::ham::{ActionVector, Hamiltonian};
use kamtori::index::{MonomialKey, MultiIndex};
use kamtori::weight::SigmaWeight;

fn main() {
    let w = SigmaWeight::desk(2.5).unwrap();
    let i0 = ActionVector::torus(4, &w);
    let key = MonomialKey::new(
        MultiIndex::new(),
        MultiIndex::from_pairs([(-4, 1), (1, 2)]),
        MultiIndex::from_pairs([(-4, 1), (1, 2)]),
    );
    let h = Hamiltonian::single(w, 4, key, C64::from_re_im(0.0, -0.06136914637382711));
    let p = classify(&h, &i0);
    println!("r0:");
    for (k, c) in &p.r0 { println!("  {k} -> {:?}", c.to_c64()); }
    println!("r1:");
    for (k, c) in &p.r1 { println!("  j={} {} -> {:?}", k.j, k.key, c.to_c64()); }
    println!("r2:");
    for (k, c) in &p.r2 { println!("  j=({},{}) {} -> {:?}", k.j1, k.j2, k.key, c.to_c64()); }
    let back = reconstruct(&p);
    println!("back:");
    for (k, c) in &back.terms { println!("  {k} -> {:?}", c.to_c64()); }
}
