use coupled_cavities::validate;

fn main() {
    println!("{}", validate::early_time_factorization().line());
    println!("{}", validate::oracle_equivalence().line());
    println!("{}", validate::same_detector_fraction().line());
}
