use qlv::prng::{lcg_jump, lcg_step, permute, permute_inv, LcgParams, PermutationSpec, PrnSource};

fn main() -> qlv::Result<()> {
    let lcg = LcgParams::new(16, 0x5bd5, 0x3039)?;
    println!("full period: {}", lcg.is_full_period());

    let x0 = 42;
    let mut x = x0;
    for _ in 0..1000 {
        x = lcg_step(&lcg, x);
    }
    println!("1000 steps: {x}, jump: {}", lcg_jump(&lcg, x0, 1000));

    let perm = PermutationSpec::default_for(16);
    let y = permute(&perm, x, 16);
    println!("permuted {x} -> {y} -> {}", permute_inv(&perm, y, 16));

    // One path reads n_t consecutive elements; path k starts at element k·n_t.
    let src = PrnSource::with_default_permutation(lcg, x0 as u64)?;
    for path in 0..3 {
        println!("path {path} digits: {:?}", src.path_digits(path, 4, 8));
    }
    Ok(())
}
