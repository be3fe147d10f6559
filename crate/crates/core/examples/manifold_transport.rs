//! Transport of curves by a shear flow and the Hölder class of the image.

use halfslip::lagrangian::{transport_manifold, AnalyticField, FlowOptions, Manifold};

fn main() -> halfslip::Result<()> {
    let shear = AnalyticField::new(|x, _| [0.4 * (1.0 + x[2]).ln(), 0.2 * x[0].sin(), 0.0], (0.0, 1.0), 1.0);
    let curves = [
        Manifold::Segment { a: [0.5, 0.5, 0.2], b: [1.5, 1.0, 1.5] },
        Manifold::Circle { center: [2.0, 2.0, 0.8], radius: 0.5 },
        Manifold::HolderGraph {
            origin: [0.5, 1.0, 1.0],
            direction: [1.0, 0.0, 0.0],
            normal: [0.0, 0.0, 1.0],
            length: 2.0,
            amplitude: 0.2,
            alpha: 0.5,
            terms: 14,
        },
    ];
    for m in &curves {
        let r = transport_manifold(&shear, m, 10, 1.0, &FlowOptions::default())?;
        println!(
            "nominal class {:.2}: estimated {:.3} before, {:.3} after transport to t = {}",
            m.class(),
            r.class_initial,
            r.class_transported,
            r.t
        );
    }
    Ok(())
}
