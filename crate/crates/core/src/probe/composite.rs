//! Average images of the samples that drive a neuron highest and lowest.

use std::path::Path;

use ndarray::{ArrayD, ArrayViewD, Axis};

use crate::error::{Error, Result};
use crate::probe::layer::neuron_activations;
use crate::scalar::Real;
use crate::tensor::{read_npy, AnyTensor, Manifest};

/// Pixel-wise means over the `n` highest- and `n` lowest-activation samples.
///
/// `images` has the sample axis first. `n` is clamped to the number of
/// samples; ties in activation go to the lower sample index.
pub fn composite_faces<F: Real>(
    images: ArrayViewD<F>,
    activations: &[f64],
    n: usize,
) -> Result<(ArrayD<f64>, ArrayD<f64>)> {
    if images.ndim() < 2 || images.shape()[0] == 0 {
        return Err(Error::Parameter("empty image stack".into()));
    }
    let count = images.shape()[0];
    if activations.len() != count {
        return Err(Error::Parameter(format!(
            "{} activations for {count} images",
            activations.len()
        )));
    }
    if n < 1 {
        return Err(Error::Parameter("composite size must be >= 1".into()));
    }
    let n = n.min(count);
    let mut order: Vec<usize> = (0..count).collect();
    order.sort_by(|&a, &b| activations[b].total_cmp(&activations[a]).then(a.cmp(&b)));
    let high = &order[..n];
    let mut low_order: Vec<usize> = (0..count).collect();
    low_order.sort_by(|&a, &b| activations[a].total_cmp(&activations[b]).then(a.cmp(&b)));
    let low = &low_order[..n];
    Ok((mean_of(&images, high), mean_of(&images, low)))
}

fn mean_of<F: Real>(images: &ArrayViewD<F>, idx: &[usize]) -> ArrayD<f64> {
    let mut acc = ArrayD::<f64>::zeros(images.index_axis(Axis(0), 0).shape());
    for &i in idx {
        acc.zip_mut_with(&images.index_axis(Axis(0), i), |a, &v| *a += v.as_f64());
    }
    acc / idx.len() as f64
}

/// Writes an `(h, w)`, `(h, w, 1)` or `(h, w, 3)` image of 0–255 values as 8-bit PNG.
///
/// Values are rounded half-to-even and clamped to `[0, 255]`.
pub fn write_png(path: impl AsRef<Path>, image: &ArrayD<f64>) -> Result<()> {
    let path = path.as_ref();
    let (h, w, color) = match *image.shape() {
        [h, w] => (h, w, png::ColorType::Grayscale),
        [h, w, 1] => (h, w, png::ColorType::Grayscale),
        [h, w, 3] => (h, w, png::ColorType::Rgb),
        ref other => {
            return Err(Error::Parameter(format!("cannot encode image of shape {other:?}")));
        }
    };
    let pixels: Vec<u8> = image
        .iter()
        .map(|&v| v.round_ties_even().clamp(0.0, 255.0) as u8)
        .collect();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut encoder = png::Encoder::new(std::io::BufWriter::new(file), w as u32, h as u32);
    encoder.set_color(color);
    encoder.set_depth(png::BitDepth::Eight);
    let mut writer = encoder
        .write_header()
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    writer
        .write_image_data(&pixels)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    writer
        .finish()
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

/// Writes `<attr>_<layer>_<neuron>_{high,low}.png` for each neuron of a manifest layer.
///
/// Images come from the manifest's `images` array, shaped `(N, h, w)` or
/// `(N, h, w, 3)` with values in 0–255.
pub fn write_composites(
    manifest: &Manifest,
    layer_name: &str,
    neurons: &[usize],
    n: usize,
    attr: &str,
    out_dir: impl AsRef<Path>,
) -> Result<Vec<std::path::PathBuf>> {
    let out_dir = out_dir.as_ref();
    let images_path = manifest
        .images_path()
        .ok_or_else(|| Error::Parameter("manifest has no `images` entry".into()))?;
    let images = read_npy(&images_path)?.into_real::<f64>();
    if images.shape().first() != Some(&manifest.n_samples) {
        return Err(Error::Format(format!(
            "{}: expected {} images, found shape {:?}",
            images_path.display(),
            manifest.n_samples,
            images.shape()
        )));
    }
    let entry = manifest
        .layers
        .iter()
        .find(|l| l.name == layer_name)
        .ok_or_else(|| Error::Parameter(format!("no layer named `{layer_name}`")))?;
    let layer = manifest.read_layer(entry)?;
    let mut written = Vec::new();
    for &neuron in neurons {
        let acts = match &layer {
            AnyTensor::F32(t) => neuron_activations(&t.flatten().0, neuron)?,
            AnyTensor::F64(t) => neuron_activations(&t.flatten().0, neuron)?,
        };
        let (high, low) = composite_faces(images.view(), &acts, n)?;
        for (tag, img) in [("high", &high), ("low", &low)] {
            let path = out_dir.join(format!("{attr}_{layer_name}_{neuron}_{tag}.png"));
            write_png(&path, img)?;
            written.push(path);
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{Array3, IxDyn};

    fn stack(values: &[f64]) -> ArrayD<f64> {
        // one 1×2 image per value
        let mut a = Array3::zeros((values.len(), 1, 2));
        for (i, &v) in values.iter().enumerate() {
            a[[i, 0, 0]] = v;
            a[[i, 0, 1]] = 2.0 * v;
        }
        a.into_dyn()
    }

    #[test]
    fn order_statistics() {
        let images = stack(&[0.0, 10.0, 20.0, 30.0, 40.0]);
        let acts = [0.1, 0.2, 0.3, 0.4, 0.5];
        let (high, low) = composite_faces(images.view(), &acts, 2).unwrap();
        assert_eq!(high, ArrayD::from_shape_vec(IxDyn(&[1, 2]), vec![35.0, 70.0]).unwrap());
        assert_eq!(low, ArrayD::from_shape_vec(IxDyn(&[1, 2]), vec![5.0, 10.0]).unwrap());
    }

    #[test]
    fn identical_images() {
        let images = stack(&[7.0, 7.0]);
        let (high, low) = composite_faces(images.view(), &[1.0, -1.0], 2).unwrap();
        assert_eq!(high, low);
        assert_eq!(high[[0, 1]], 14.0);
    }

    #[test]
    fn clamps_and_breaks_ties_by_index() {
        let images = stack(&[1.0, 2.0, 3.0]);
        let (high, low) = composite_faces(images.view(), &[0.0, 0.0, 0.0], 1).unwrap();
        assert_eq!(high[[0, 0]], 1.0);
        assert_eq!(low[[0, 0]], 1.0);
        let (high, _) = composite_faces(images.view(), &[0.0, 0.0, 0.0], 100).unwrap();
        assert_eq!(high[[0, 0]], 2.0);
        let empty = ArrayD::<f64>::zeros(IxDyn(&[0, 2, 2]));
        assert!(composite_faces(empty.view(), &[], 1).is_err());
    }

    #[test]
    fn png_rounding() {
        let dir = tempfile::tempdir().unwrap();
        let img = ArrayD::from_shape_vec(IxDyn(&[1, 4]), vec![0.5, 1.5, 254.5, 300.0]).unwrap();
        let path = dir.path().join("x.png");
        write_png(&path, &img).unwrap();
        let decoder = png::Decoder::new(std::io::BufReader::new(std::fs::File::open(&path).unwrap()));
        let mut reader = decoder.read_info().unwrap();
        let mut buf = vec![0; reader.output_buffer_size().unwrap()];
        reader.next_frame(&mut buf).unwrap();
        assert_eq!(&buf[..4], &[0, 2, 254, 255]);
    }
}
