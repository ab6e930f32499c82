use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::C64;

/// Type-I discrete sine transform via a real-odd FFT of length `2(n+1)`.
pub(crate) struct Dst1 {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl Dst1 {
    pub fn new(n: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(2 * (n + 1));
        Dst1 { n, fft }
    }

    /// `y_k = Σ_j x_j sin(π (j+1)(k+1) / (n+1))`, in place.
    pub fn apply(&self, x: &mut [f64], buf: &mut [C64]) {
        let n = self.n;
        buf.iter_mut().for_each(|b| *b = C64::new(0.0, 0.0));
        for j in 0..n {
            buf[j + 1] = C64::new(x[j], 0.0);
            buf[2 * n + 1 - j] = C64::new(-x[j], 0.0);
        }
        self.fft.process(buf);
        for k in 0..n {
            x[k] = -buf[k + 1].im / 2.0;
        }
    }
}

/// Solve `-Δ_h q = f` on the `nx × ny` interior of a grid with spacing
/// `h`, given Dirichlet values on the surrounding ring through `ring`
/// (called with ring indices `(i, j)` in the extended `(nx+2) × (ny+2)`
/// frame). Row-major input and output.
pub(crate) fn solve_dirichlet(
    f: &[f64],
    nx: usize,
    ny: usize,
    h: f64,
    ring: impl Fn(usize, usize) -> f64,
) -> Vec<f64> {
    let mut rhs = f.to_vec();
    let h2 = h * h;
    // move boundary values to the right-hand side
    for j in 0..ny {
        rhs[j * nx] += ring(0, j + 1) / h2;
        rhs[j * nx + nx - 1] += ring(nx + 1, j + 1) / h2;
    }
    for i in 0..nx {
        rhs[i] += ring(i + 1, 0) / h2;
        rhs[(ny - 1) * nx + i] += ring(i + 1, ny + 1) / h2;
    }

    let dx = Dst1::new(nx);
    let dy = Dst1::new(ny);
    let mut bx = vec![C64::new(0.0, 0.0); 2 * (nx + 1)];
    let mut by = vec![C64::new(0.0, 0.0); 2 * (ny + 1)];
    let mut col = vec![0.0; ny];

    let transform = |data: &mut [f64], bx: &mut [C64], by: &mut [C64], col: &mut [f64]| {
        for j in 0..ny {
            dx.apply(&mut data[j * nx..(j + 1) * nx], bx);
        }
        for i in 0..nx {
            for j in 0..ny {
                col[j] = data[j * nx + i];
            }
            dy.apply(col, by);
            for j in 0..ny {
                data[j * nx + i] = col[j];
            }
        }
    };

    transform(&mut rhs, &mut bx, &mut by, &mut col);
    for j in 0..ny {
        let ly = 2.0 - 2.0 * (std::f64::consts::PI * (j + 1) as f64 / (ny + 1) as f64).cos();
        for i in 0..nx {
            let lx = 2.0 - 2.0 * (std::f64::consts::PI * (i + 1) as f64 / (nx + 1) as f64).cos();
            rhs[j * nx + i] *= h2 / (lx + ly);
        }
    }
    transform(&mut rhs, &mut bx, &mut by, &mut col);
    let norm = 4.0 / ((nx + 1) * (ny + 1)) as f64;
    rhs.iter_mut().for_each(|v| *v *= norm);
    rhs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dst_is_its_own_inverse_up_to_scale() {
        let n = 7;
        let d = Dst1::new(n);
        let mut buf = vec![C64::new(0.0, 0.0); 2 * (n + 1)];
        let x0: Vec<f64> = (0..n).map(|k| (k as f64 * 0.7).sin() + 0.1 * k as f64).collect();
        let mut x = x0.clone();
        d.apply(&mut x, &mut buf);
        let direct: Vec<f64> = (0..n)
            .map(|k| {
                (0..n)
                    .map(|j| x0[j] * (std::f64::consts::PI * ((j + 1) * (k + 1)) as f64 / (n + 1) as f64).sin())
                    .sum()
            })
            .collect();
        for (a, b) in x.iter().zip(&direct) {
            assert!((a - b).abs() < 1e-12);
        }
        d.apply(&mut x, &mut buf);
        for (a, b) in x.iter().zip(&x0) {
            assert!((a * 2.0 / (n + 1) as f64 - b).abs() < 1e-12);
        }
    }

    #[test]
    fn solves_discrete_poisson_problem() {
        let (nx, ny, h) = (13, 9, 0.1);
        let q: Vec<f64> = (0..nx * ny).map(|k| ((k * 37) % 11) as f64 - 5.0).collect();
        let ring = |i: usize, j: usize| 0.3 * i as f64 - 0.1 * j as f64;
        let at = |i: isize, j: isize| -> f64 {
            if i < 0 || j < 0 || i >= nx as isize || j >= ny as isize {
                ring((i + 1) as usize, (j + 1) as usize)
            } else {
                q[j as usize * nx + i as usize]
            }
        };
        let mut f = vec![0.0; nx * ny];
        for j in 0..ny as isize {
            for i in 0..nx as isize {
                let lap = at(i + 1, j) + at(i - 1, j) + at(i, j + 1) + at(i, j - 1) - 4.0 * at(i, j);
                f[j as usize * nx + i as usize] = -lap / (h * h);
            }
        }
        let sol = solve_dirichlet(&f, nx, ny, h, ring);
        for (a, b) in sol.iter().zip(&q) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }
}
