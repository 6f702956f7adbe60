use clap::{Parser, Subcommand};

use drivevqa_cli::commands::{
    cmd_evaluate, cmd_filter, cmd_plot, EvaluateArgs, FilterArgs, PlotArgs,
};

const FORMATS_HELP: &str = "\
FILE FORMATS:
  detection dump   binary, magic `ROIF`: version, image size, vocabulary,
                   then five columns (class ids, scores, boxes, normalized
                   boxes, ROI features); little-endian, row-major f32
  manifest.jsonl   one sample per line: {\"sample_id\", \"camera\",
                   \"image_ref\", \"questions\": [{\"id\", \"text\"}]}
  human_answers.jsonl
                   one question per line: {\"question_id\", \"answers\":
                   [{\"rater_id\", \"answer\", \"observed_features\"}]}
  ratings.csv      question_id,variant,rater_id,rating   (rating in 1..=5)
  whitelist        one class name per line, `#` comments
  synonyms         `term = term` per line, `#` comments

The corpus root may also come from the DRIVEVQA_CORPUS environment
variable. Exit codes: 0 success, 1 environment/I-O failure, 2 invalid
input or configuration.";

/// Driving-scene VQA toolkit: filter detection batches to driving-relevant
/// classes, run filtered vs unfiltered pipeline variants over a corpus, and
/// score both against human answers.
#[derive(Parser)]
#[command(name = "drivevqa", version, after_long_help = FORMATS_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Filter a detection dump through a class whitelist and threshold.
    Filter(FilterArgs),
    /// Run pipeline variants over a corpus, score them, and emit reports.
    Evaluate(EvaluateArgs),
    /// Render grouped bar charts (MAE, RMSE, Pearson) from aggregates.
    Plot(PlotArgs),
}

fn main() {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Filter(args) => cmd_filter(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Plot(args) => cmd_plot(args),
    };
    if let Err(err) = outcome {
        eprintln!("error: {err}");
        std::process::exit(err.code);
    }
}
