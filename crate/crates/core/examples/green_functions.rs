//! Half-space Green functions with images and the boundary potential of a
//! mean-zero kernel.

use halfslip::grid::{make_grid, BoundaryField};
use halfslip::potential::{adn_boundary_potential, fundamental_solution, AdnKernel, GreensKernel};

fn main() -> halfslip::Result<()> {
    let y = [0.3, -0.2, 0.8];
    let (gd, gn) = (GreensKernel::dirichlet(), GreensKernel::neumann());
    println!("Gamma(1,0,0) = {:.6}", fundamental_solution([1.0, 0.0, 0.0])?);
    for x in [[0.0, 0.0, 0.0], [0.5, 0.5, 0.0], [0.1, 0.0, 0.4]] {
        println!(
            "x = {x:?}: G_D = {:+.3e}  G_N = {:+.3e}  d3 G_N = {:+.3e}",
            gd.eval(x, y)?,
            gn.eval(x, y)?,
            gn.grad_x(x, y)?[2]
        );
    }
    // symmetry G(x, y) = G(y, x)
    let x = [1.0, 0.4, 0.2];
    println!("G_D(x,y) - G_D(y,x) = {:e}", gd.eval(x, y)? - gd.eval(y, x)?);

    let g = make_grid(32, 32, 16, 0.125)?;
    let phi = BoundaryField::from_fn(g, |z| (-((z[0] - 2.0).powi(2) + (z[1] - 2.0).powi(2))).exp());
    for name in ["w1", "w1w2", "w1sq-w2sq"] {
        let r = adn_boundary_potential(&AdnKernel::named(name)?, &phi, 2.0)?;
        println!("kernel {name:>9}: |grad psi|_2 = {:.4e}, wall seminorm = {:.4e}", r.grad_norm, r.seminorm);
    }
    Ok(())
}
