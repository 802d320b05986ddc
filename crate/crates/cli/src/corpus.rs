//! Corpus and inventory utility commands.

use std::io::Write;

use anyhow::Context;
use contsynth_core::corpus::{estimate_token_probs, generate_corpus, load_corpus, save_corpus};
use contsynth_core::dsl::default_inventory;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::args::{DumpInventoryArgs, EstProbsArgs, GenCorpusArgs};
use crate::load_inventory;

pub fn gen_corpus(args: &GenCorpusArgs) -> anyhow::Result<()> {
    let inventory = load_inventory(args.inventory.as_deref())?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let entries = generate_corpus(args.count, args.length, &inventory, &mut rng)
        .context("generating corpus")?;
    save_corpus(&args.out, &entries, &inventory)
        .with_context(|| format!("writing {}", args.out.display()))?;
    eprintln!(
        "wrote {} tasks of length {} to {}",
        entries.len(),
        args.length,
        args.out.display()
    );
    Ok(())
}

pub fn est_probs(args: &EstProbsArgs) -> anyhow::Result<()> {
    let inventory = load_inventory(args.inventory.as_deref())?;
    let entries = load_corpus(&args.corpus, &inventory)
        .with_context(|| format!("loading corpus {}", args.corpus.display()))?;
    let probs =
        estimate_token_probs(&entries, &inventory).context("estimating token probabilities")?;
    probs
        .save(&args.out, &inventory)
        .with_context(|| format!("writing {}", args.out.display()))?;
    eprintln!("estimated probabilities from {} programs", entries.len());
    Ok(())
}

pub fn dump_inventory(args: &DumpInventoryArgs) -> anyhow::Result<()> {
    let tsv = default_inventory().to_tsv();
    match &args.out {
        Some(path) => {
            std::fs::write(path, tsv).with_context(|| format!("writing {}", path.display()))?
        }
        None => std::io::stdout().write_all(tsv.as_bytes())?,
    }
    Ok(())
}
