//! Multichannel WAV input and output.

use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::{Error, Result};

/// Channel-major audio: `channels[m][n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Audio {
    pub fs: f64,
    pub channels: Vec<Vec<f64>>,
}

impl Audio {
    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn len(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Reads 16-bit integer or 32-bit float PCM. Integer samples are scaled to [-1, 1).
pub fn read(path: &Path) -> Result<Audio> {
    let reader = WavReader::open(path).map_err(|e| match e {
        hound::Error::IoError(io) => Error::io(path, io),
        other => Error::Data(format!("{}: {other}", path.display())),
    })?;
    let spec = reader.spec();
    let m = spec.channels as usize;
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<Result<_, _>>()?,
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<Result<_, _>>()?,
        (format, bits) => {
            return Err(Error::Data(format!(
                "{}: unsupported sample format {format:?} {bits}-bit",
                path.display()
            )))
        }
    };
    let mut channels = vec![Vec::with_capacity(interleaved.len() / m.max(1)); m];
    for (i, v) in interleaved.into_iter().enumerate() {
        channels[i % m].push(v);
    }
    Ok(Audio {
        fs: spec.sample_rate as f64,
        channels,
    })
}

/// Reads a file and checks it against the array and sample rate in use.
pub fn read_checked(path: &Path, num_mics: usize, fs: f64) -> Result<Audio> {
    let audio = read(path)?;
    if audio.num_channels() != num_mics {
        return Err(Error::Data(format!(
            "{}: {} channels, array has {num_mics} microphones",
            path.display(),
            audio.num_channels()
        )));
    }
    if audio.fs != fs {
        return Err(Error::Data(format!(
            "{}: sample rate {} Hz, expected {fs} Hz",
            path.display(),
            audio.fs
        )));
    }
    Ok(audio)
}

/// Writes 32-bit float PCM.
pub fn write(path: &Path, audio: &Audio) -> Result<()> {
    if audio.fs.fract() != 0.0 || audio.fs <= 0.0 || audio.fs > u32::MAX as f64 {
        return Err(Error::Config(format!(
            "sample rate {} is not a positive integer",
            audio.fs
        )));
    }
    let spec = WavSpec {
        channels: audio.num_channels() as u16,
        sample_rate: audio.fs as u32,
        bits_per_sample: 32,
        sample_format: SampleFormat::Float,
    };
    let mut writer = WavWriter::create(path, spec).map_err(|e| match e {
        hound::Error::IoError(io) => Error::io(path, io),
        other => Error::Wav(other),
    })?;
    for n in 0..audio.len() {
        for ch in &audio.channels {
            writer.write_sample(ch[n] as f32)?;
        }
    }
    writer.finalize()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.wav");
        let audio = Audio {
            fs: 16000.0,
            channels: vec![vec![0.5, -0.25, 0.0], vec![0.125, 1.0, -1.0]],
        };
        write(&path, &audio).unwrap();
        assert_eq!(read(&path).unwrap(), audio);
        assert!(read_checked(&path, 2, 16000.0).is_ok());
        assert!(matches!(
            read_checked(&path, 3, 16000.0),
            Err(Error::Data(_))
        ));
        assert!(matches!(
            read_checked(&path, 2, 8000.0),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn reads_16_bit() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("b.wav");
        let spec = WavSpec {
            channels: 1,
            sample_rate: 16000,
            bits_per_sample: 16,
            sample_format: SampleFormat::Int,
        };
        let mut w = WavWriter::create(&path, spec).unwrap();
        for v in [16384i16, -32768, 0] {
            w.write_sample(v).unwrap();
        }
        w.finalize().unwrap();
        assert_eq!(read(&path).unwrap().channels, vec![vec![0.5, -1.0, 0.0]]);
    }

    #[test]
    fn garbage_is_data_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.wav");
        std::fs::write(&path, b"not a wav file at all").unwrap();
        assert!(matches!(read(&path), Err(Error::Data(_))));
    }
}
