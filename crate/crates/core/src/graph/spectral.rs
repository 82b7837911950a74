use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use super::{check_rank, Graph, Op, Sink, Var};
use crate::signal::fft::Fft;
use crate::signal::stft::load_frame;
use crate::signal::StftConfig;
use crate::{Result, Scalar, Tensor};

impl<T: Scalar> Graph<T> {
    /// STFT magnitudes of each row of `[B, T]`, giving `[B, frames, bins]`.
    ///
    /// The transform runs in `f64` regardless of `T`. The derivative of `|S|`
    /// at `S = 0` is taken to be 0.
    pub fn stft_magnitude(&mut self, x: Var, cfg: &StftConfig) -> Result<Var> {
        cfg.validate()?;
        let xv = self.val(x);
        check_rank("stft_magnitude", xv.shape(), 2)?;
        let (batch, len) = (xv.dim(0), xv.dim(1));
        let frames = cfg.frames(len)?;
        let bins = cfg.bins();
        let fft = Fft::new(cfg.fft_size)?;
        let window = cfg.window();
        let mut spectrum = Vec::with_capacity(batch * frames * bins * 2);
        let mut mags = Vec::with_capacity(batch * frames * bins);
        let mut buf = vec![Complex64::new(0.0, 0.0); cfg.fft_size];
        let mut frame = vec![0.0f64; cfg.window_len];
        for row in xv.data().chunks(len) {
            for f in 0..frames {
                let src = &row[f * cfg.hop..f * cfg.hop + cfg.window_len];
                for (d, &s) in frame.iter_mut().zip(src) {
                    *d = s.as_f64();
                }
                load_frame(&mut buf, &frame, &window);
                fft.forward(&mut buf);
                for c in &buf[..bins] {
                    spectrum.push(c.re);
                    spectrum.push(c.im);
                    mags.push(T::of(c.norm()));
                }
            }
        }
        let requires = self.requires_grad(x);
        Ok(self.push(
            Tensor::from_parts(vec![batch, frames, bins], mags),
            Op::StftMag {
                input: x.0,
                cfg: *cfg,
                spectrum: if requires { spectrum } else { Vec::new() },
            },
            &[x.0],
        ))
    }
}

pub(super) fn stft_mag_backward<T: Scalar>(
    input: usize,
    cfg: &StftConfig,
    spectrum: &[f64],
    out: &Tensor<T>,
    g: &[T],
    sink: &mut Sink<'_, T>,
) {
    let len = sink.value(input).dim(1);
    let (frames, bins) = (out.dim(1), out.dim(2));
    let Some(dst) = sink.acc(input) else {
        return;
    };
    let fft = Fft::new(cfg.fft_size).expect("validated in forward");
    let window = cfg.window();
    let mut buf = vec![Complex64::new(0.0, 0.0); cfg.fft_size];
    for (b, drow) in dst.chunks_mut(len).enumerate() {
        for f in 0..frames {
            let base = (b * frames + f) * bins;
            buf.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
            for k in 0..bins {
                let s = Complex64::new(spectrum[2 * (base + k)], spectrum[2 * (base + k) + 1]);
                let m = s.norm();
                if m > 0.0 {
                    buf[k] = s.conj() * (g[base + k].as_f64() / m);
                }
            }
            fft.forward(&mut buf);
            let seg = &mut drow[f * cfg.hop..f * cfg.hop + cfg.window_len];
            for ((d, w), c) in seg.iter_mut().zip(&window).zip(&buf) {
                *d = *d + T::of(w * c.re);
            }
        }
    }
}
