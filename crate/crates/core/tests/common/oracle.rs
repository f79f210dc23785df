//! Brute-force reference for the 14 per-segment features, written directly
//! from the formulas with plain loops over `(x, y, t)` triples. Shares no code
//! with the library's feature path.

#![allow(dead_code)]

pub type Triple = (f64, f64, f64);

/// One 14-value row per 5-point block: seg (10), dis, sim, v, a.
pub fn oracle_rows(points: &[Triple]) -> Vec<[f64; 14]> {
    let blocks: Vec<&[Triple]> = points.chunks_exact(5).collect();
    let mut rows = Vec::with_capacity(blocks.len());
    for (i, block) in blocks.iter().enumerate() {
        let mut row = [0.0; 14];
        for j in 0..5 {
            row[2 * j] = block[j].0;
            row[2 * j + 1] = block[j].1;
        }

        let mut dis = 0.0;
        for j in 0..4 {
            let dx = block[j + 1].0 - block[j].0;
            let dy = block[j + 1].1 - block[j].1;
            dis += (dx.powi(2) + dy.powi(2)).sqrt();
        }
        row[10] = dis;

        row[11] = match blocks.get(i + 1) {
            None => 1.0,
            Some(next) => {
                let mut dot = 0.0;
                let mut na = 0.0;
                let mut nb = 0.0;
                for j in 0..5 {
                    dot += block[j].0 * next[j].0 + block[j].1 * next[j].1;
                    na += block[j].0.powi(2) + block[j].1.powi(2);
                    nb += next[j].0.powi(2) + next[j].1.powi(2);
                }
                if na == 0.0 || nb == 0.0 {
                    1.0
                } else {
                    (dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0)
                }
            }
        };

        let span = block[4].2 - block[0].2;
        row[12] = if span == 0.0 { 0.0 } else { dis / span };

        // Backward-difference point speeds; the first point has none.
        let mut speed = [0.0; 5];
        for j in 1..5 {
            let dt = block[j].2 - block[j - 1].2;
            let step = ((block[j].0 - block[j - 1].0).powi(2)
                + (block[j].1 - block[j - 1].1).powi(2))
            .sqrt();
            speed[j] = if dt == 0.0 { 0.0 } else { step / dt };
        }
        let mut acc = 0.0;
        for j in 1..4 {
            let dt = block[j + 1].2 - block[j - 1].2;
            if dt != 0.0 {
                acc += (speed[j + 1] - speed[j - 1]) / dt;
            }
        }
        row[13] = acc / 3.0;
        rows.push(row);
    }
    rows
}
