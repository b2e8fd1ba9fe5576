use crate::error::Result;
use crate::field::Field2D;

pub const SSIM_C1: f64 = 0.01;
pub const SSIM_C2: f64 = 0.03;

pub fn rmse(a: &Field2D, b: &Field2D) -> Result<f64> {
    a.check_same_shape(b)?;
    let n = a.len() as f64;
    let ss: f64 = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok((ss / n).sqrt())
}

/// Global (unwindowed) SSIM with population moments.
pub fn ssim(a: &Field2D, b: &Field2D) -> Result<f64> {
    a.check_same_shape(b)?;
    let n = a.len() as f64;
    let (mx, my) = (a.mean(), b.mean());
    let (mut vx, mut vy, mut cxy) = (0.0, 0.0, 0.0);
    for (x, y) in a.values().iter().zip(b.values()) {
        let (dx, dy) = (x - mx, y - my);
        vx += dx * dx;
        vy += dy * dy;
        cxy += dx * dy;
    }
    let (vx, vy, cxy) = (vx / n, vy / n, cxy / n);
    Ok(((2.0 * mx * my + SSIM_C1) * (2.0 * cxy + SSIM_C2))
        / ((mx * mx + my * my + SSIM_C1) * (vx + vy + SSIM_C2)))
}
