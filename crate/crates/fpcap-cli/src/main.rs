mod args;
mod output;
mod run;
mod scan;

fn main() {
    std::process::exit(run::main_entry());
}
