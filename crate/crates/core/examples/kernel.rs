//! SVD, pseudo-inverse and the null projector on a small rank-deficient matrix.

use mtt::matops;
use mtt::Matrix;

fn main() -> mtt::Result<()> {
    let a = Matrix::from_row_slice(3, 4, &[1.0, 2.0, 3.0, 4.0, 2.0, 4.0, 6.0, 8.0, 1.0, 0.0, 1.0, 0.0]);
    let f = matops::svd(&a)?;
    println!("singular values: {:?}", f.sigma);
    println!("numerical rank:  {}", f.rank(None));

    let p = matops::pinv(&a, None)?;
    println!("‖A A† A − A‖ = {:.2e}", (&a * &p * &a - &a).norm());

    let g = matops::null_projector(&a, None)?;
    println!("‖A G‖ = {:.2e}, trace G = {:.3}", (&a * &g).norm(), g.trace());

    let best1 = matops::truncated_svd(&a, 1)?;
    println!("rank-1 approximation error: {:.4}", (&a - best1).norm());
    Ok(())
}
