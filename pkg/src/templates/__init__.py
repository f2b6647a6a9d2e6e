from src.templates.template_loader import format_number, get_available_templates, render_template
