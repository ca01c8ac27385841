"""Main launch file that creates an instance of the pricing engine's command-line app and runs it."""

from app import create_app

app = create_app()

if __name__ == "__main__":
    app()
