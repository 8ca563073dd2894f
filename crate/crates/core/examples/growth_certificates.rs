//! Growth certificates for the four sub-bases, on fixed and random terms.

use basisforge::growth::sample::TermSampler;
use basisforge::growth::{check_certificate, GrowthCertificate, Lemma};
use basisforge::parse;
use num_bigint::BigUint;

fn main() {
    let fixed = [
        (Lemma::ModExp, "2^x % (x % 7)"),
        (Lemma::AddExp, "2^(x+2) + x"),
        (Lemma::AddMod, "(x + 3) % 5 + x"),
        (Lemma::DoubleModExp, "double(x) % 6"),
        (Lemma::DoubleModExp, "2^2^double(x) % 2^2^x"),
    ];
    for (lemma, src) in fixed {
        let t = parse(src).unwrap();
        let cert = lemma.certify(&t).unwrap();
        println!("{:<15} {src:<24} {cert:<12} {}", lemma.name(), check_certificate(&t, &cert, 0..=2000).status);
    }

    let fake = GrowthCertificate::ModExp { b: BigUint::from(5u32) };
    let r = check_certificate(&parse("x + 1").unwrap(), &fake, 0..=100);
    println!("x + 1 with B=5: {r}");

    for lemma in Lemma::ALL {
        let mut s = TermSampler::new(&lemma.signature(), 12, 10, 7);
        let bad = (0..100)
            .filter(|_| {
                let t = s.sample();
                !check_certificate(&t, &lemma.certify(&t).unwrap(), 0..=500).passed()
            })
            .count();
        println!("{}: {bad} of 100 random terms fail", lemma.name());
    }
}
