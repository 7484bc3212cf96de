use std::time::Instant;

use cscore::engine::{class_cscore, GoldList, GoldMember};
use cscore::{CamMethod, Heatmap, Tensor2D};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let n: usize = std::env::args().nth(1).map_or(855, |s| s.parse().unwrap());
    let side = 224;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let maps: Vec<Heatmap> = (0..n)
        .map(|_| {
            let data = (0..side * side).map(|_| rng.gen::<f32>()).collect();
            Heatmap::from_unit(Tensor2D::new(side, side, data).unwrap()).unwrap()
        })
        .collect();
    let members = (0..n)
        .map(|i| GoldMember { image_id: format!("img{i:04}"), confidence: rng.gen_range(0.5..=1.0) })
        .collect();
    let gold = GoldList::from_members(1, "E0", 0.5, members).unwrap();
    let t = Instant::now();
    let r = class_cscore(CamMethod::GradCam, &maps, &gold, 2.0).unwrap();
    println!("n={n} cscore={} in {:.2?}", r.cscore, t.elapsed());
}
