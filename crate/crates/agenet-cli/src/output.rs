//! CSV writing with a provenance comment line (config hash, seed, version)
//! so identical runs produce byte-identical files.

use agenet_core::ValidatedConfig;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

pub struct Csv {
    w: BufWriter<File>,
}

impl Csv {
    pub fn create(
        dir: &Path,
        name: &str,
        cfg: &ValidatedConfig,
        header: &str,
    ) -> anyhow::Result<Csv> {
        let path = dir.join(name);
        let file = File::create(&path)
            .map_err(|e| anyhow::anyhow!("cannot create {}: {e}", path.display()))?;
        let mut w = BufWriter::new(file);
        writeln!(
            w,
            "# agenet v{} config_hash={:#018x} seed={}",
            env!("CARGO_PKG_VERSION"),
            cfg.fingerprint(),
            cfg.sim.seed
        )?;
        writeln!(w, "{header}")?;
        Ok(Csv { w })
    }

    pub fn row(&mut self, fields: &[String]) -> anyhow::Result<()> {
        writeln!(self.w, "{}", fields.join(","))?;
        Ok(())
    }

    pub fn finish(mut self) -> anyhow::Result<()> {
        self.w.flush()?;
        Ok(())
    }
}

/// Format an f64 for CSV: shortest round-trip decimal; infinities as "inf".
pub fn num(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else if v.is_nan() {
        "NaN".into()
    } else {
        format!("{v}")
    }
}
