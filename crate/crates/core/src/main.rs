use clap::Parser;

fn main() {
    let args = fracback::cli::Args::parse();
    std::process::exit(fracback::cli::main_with(args));
}
