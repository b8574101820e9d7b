use clap::Parser;

fn main() {
    let args = nlpot::cli::Cli::parse();
    std::process::exit(nlpot::cli::run(&args));
}
